#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dpsgd {

/// Dense float64 parameter vector (the global v, a worker's u, or a read û).
/// The dimension is fixed at construction and every entry is finite.
class ParamVector {
 public:
  /// Zero vector. Throws ConfigError when dim == 0.
  explicit ParamVector(std::size_t dim);
  /// Throws ConfigError when empty, NumericFault on a non-finite entry.
  explicit ParamVector(std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }

  /// Consumes the vector and returns its storage.
  std::vector<double> release() && noexcept { return std::move(values_); }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

/// Worker-to-master payload: delta = u - v where v is the master iterate
/// `base_version` that seeded the worker pass.
struct UpdateVector {
  std::vector<double> delta;
  std::uint64_t base_version = 0;
  std::uint32_t worker_id = 0;
};

/// Throws NumericFault naming the first non-finite entry of `values`.
void require_finite(std::span<const double> values, const char* what);

}  // namespace dpsgd
