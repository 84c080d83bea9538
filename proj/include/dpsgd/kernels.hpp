#pragma once

// Dense float64 kernels used on the hot paths (global aggregation, update
// vectors, oracle dot products, the LDA E-step).
//
// Every kernel has a scalar reference and optional SIMD variants. The variant
// is chosen once at startup from the CPU features (override with the
// DPSGD_SIMD environment variable: "scalar", "avx2", "neon"). All variants
// are bit-identical to the scalar reference: elementwise kernels use no FMA,
// and reductions use four interleaved partial sums combined as
// (s0 + s1) + (s2 + s3) followed by a sequential tail.

#include <cstddef>
#include <span>
#include <string_view>

namespace dpsgd::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y[i] += x[i]
  void (*add)(const double* x, double* y, std::size_t n);
  // out[i] = x[i] - y[i]
  void (*sub)(const double* x, const double* y, double* out, std::size_t n);
  // y[i] *= a
  void (*scale)(double a, double* y, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
/// nullptr when the variant was not compiled in or the CPU lacks support.
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;

/// The table selected for this process.
const KernelTable& active() noexcept;

/// Re-selects the active table. Returns false if `isa` is unavailable, in
/// which case the selection is unchanged. Not safe to call concurrently with
/// running kernels.
bool select(Isa isa) noexcept;

inline double dot(std::span<const double> x, std::span<const double> y) noexcept {
  return active().dot(x.data(), y.data(), x.size());
}
inline double norm_sq(std::span<const double> x) noexcept {
  return active().dot(x.data(), x.data(), x.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) noexcept {
  active().axpy(a, x.data(), y.data(), x.size());
}
inline void add(std::span<const double> x, std::span<double> y) noexcept {
  active().add(x.data(), y.data(), x.size());
}
inline void sub(std::span<const double> x, std::span<const double> y, std::span<double> out) noexcept {
  active().sub(x.data(), y.data(), out.data(), x.size());
}
inline void scale(double a, std::span<double> y) noexcept { active().scale(a, y.data(), y.size()); }

}  // namespace dpsgd::kernels
