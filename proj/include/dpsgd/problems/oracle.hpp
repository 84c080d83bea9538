#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dpsgd/param_vector.hpp"

namespace dpsgd::problems {

/// Finite-sum objective f(x) = (1/n) sum_i f_i(x) with per-sample gradients.
/// Implementations are immutable after construction and safe to call from
/// many threads at once.
class GradOracle {
 public:
  virtual ~GradOracle() = default;

  virtual std::string_view name() const noexcept = 0;
  virtual std::size_t samples() const noexcept = 0;
  virtual std::size_t dim() const noexcept = 0;

  /// Bound V on ||grad f_i(x)|| over the feasible box, when known.
  virtual std::optional<double> gradient_bound() const { return std::nullopt; }
  /// Lipschitz constant L of grad f, when known.
  virtual std::optional<double> smoothness() const { return std::nullopt; }
  /// Half-width of the box [-r, r]^dim on which the bounds above hold.
  virtual double box_radius() const { return 1.0; }

  /// out <- grad f_i(x). Callers guarantee i < samples() and matching sizes.
  virtual void sample_grad(std::size_t i, std::span<const double> x, std::span<double> out) const = 0;
  virtual double sample_loss(std::size_t i, std::span<const double> x) const = 0;

  /// out <- mean of sample_grad over `indices`: the per-sample gradients are
  /// summed in index order, then divided by the count.
  virtual void batch_grad(std::span<const std::size_t> indices, std::span<const double> x,
                          std::span<double> out) const;

  /// Starting point for a run. Zero unless the objective has a saddle there.
  virtual std::vector<double> initial_point(std::uint64_t seed) const;
};

/// grad f_i(x). Throws ConfigError for i >= n or a dimension mismatch.
std::vector<double> grad_at(const GradOracle& oracle, std::size_t i, const ParamVector& x);
/// Mini-batch gradient: mean over the index set.
std::vector<double> grad_at(const GradOracle& oracle, std::span<const std::size_t> indices, const ParamVector& x);
/// (1/n) sum_i grad f_i(x), summed in index order and divided by n.
std::vector<double> full_grad(const GradOracle& oracle, const ParamVector& x);
/// (1/n) sum_i f_i(x).
double loss_at(const GradOracle& oracle, const ParamVector& x);

/// Named oracle with its data-generation parameters, as found in run configs.
struct ProblemSpec {
  std::string name = "quadratic";  // quadratic | sigmoid | matrix_factorization
  std::size_t n = 1000;
  std::size_t dim = 20;
  std::uint64_t data_seed = 1;
  double noise = 0.1;        // sigmoid: label flip probability; mf: observation noise sd
  double scale = 1.0;        // quadratic: center spread; sigmoid: feature scale
  double l2 = 0.0;           // sigmoid: ridge term
  std::size_t rank = 2;      // mf: latent rank
  std::size_t rows = 10;     // mf: rows of the factorized matrix (cols = dim / rank - rows)
};

std::shared_ptr<const GradOracle> make_oracle(const ProblemSpec& spec);

}  // namespace dpsgd::problems
