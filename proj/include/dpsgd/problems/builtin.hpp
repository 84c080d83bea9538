#pragma once

#include <cstdint>
#include <vector>

#include "dpsgd/problems/oracle.hpp"

namespace dpsgd::problems {

/// f_i(x) = 1/2 ||x - c_i||^2. Convex, L = 1.
class QuadraticOracle final : public GradOracle {
 public:
  /// centers is row-major n x dim.
  QuadraticOracle(std::size_t dim, std::vector<double> centers, double box_radius = 10.0);
  static QuadraticOracle generate(std::size_t n, std::size_t dim, double spread, std::uint64_t seed);

  std::string_view name() const noexcept override { return "quadratic"; }
  std::size_t samples() const noexcept override { return n_; }
  std::size_t dim() const noexcept override { return dim_; }
  std::optional<double> gradient_bound() const override;
  std::optional<double> smoothness() const override { return 1.0; }
  double box_radius() const override { return box_radius_; }

  void sample_grad(std::size_t i, std::span<const double> x, std::span<double> out) const override;
  double sample_loss(std::size_t i, std::span<const double> x) const override;

  std::span<const double> center(std::size_t i) const noexcept { return {centers_.data() + i * dim_, dim_}; }
  /// Minimizer of f: the mean center.
  std::vector<double> minimizer() const;

 private:
  std::size_t dim_;
  std::size_t n_;
  std::vector<double> centers_;
  double box_radius_;
};

/// Non-convex bounded "sigmoid regression" loss
///   f_i(x) = 1 / (1 + exp(y_i <a_i, x>)) + (l2 / 2) ||x||^2
/// with synthetic features a_i and labels y_i in {-1, +1}.
class SigmoidOracle final : public GradOracle {
 public:
  SigmoidOracle(std::size_t dim, std::vector<double> features, std::vector<double> labels, double l2,
                double box_radius = 10.0);
  /// Features N(0, scale^2 / dim); labels from a random teacher, flipped with
  /// probability `flip`.
  static SigmoidOracle generate(std::size_t n, std::size_t dim, double scale, double flip, double l2,
                                std::uint64_t seed);

  std::string_view name() const noexcept override { return "sigmoid"; }
  std::size_t samples() const noexcept override { return n_; }
  std::size_t dim() const noexcept override { return dim_; }
  std::optional<double> gradient_bound() const override;
  std::optional<double> smoothness() const override;
  double box_radius() const override { return box_radius_; }

  void sample_grad(std::size_t i, std::span<const double> x, std::span<double> out) const override;
  double sample_loss(std::size_t i, std::span<const double> x) const override;

 private:
  std::size_t dim_;
  std::size_t n_;
  std::vector<double> features_;
  std::vector<double> labels_;
  double l2_;
  double box_radius_;
  double max_feature_norm_ = 0.0;
};

/// Low-rank factorization of a partially observed matrix. The parameter
/// vector stacks the row factors (rows x rank) then the column factors
/// (cols x rank); sample i is one observed entry (r, c, m) with
///   f_i = 1/2 (<U_r, W_c> - m)^2.
class MatrixFactorizationOracle final : public GradOracle {
 public:
  struct Entry {
    std::size_t row;
    std::size_t col;
    double value;
  };

  MatrixFactorizationOracle(std::size_t rows, std::size_t cols, std::size_t rank, std::vector<Entry> entries);
  static MatrixFactorizationOracle generate(std::size_t rows, std::size_t cols, std::size_t rank, std::size_t n,
                                            double noise, std::uint64_t seed);

  std::string_view name() const noexcept override { return "matrix_factorization"; }
  std::size_t samples() const noexcept override { return entries_.size(); }
  std::size_t dim() const noexcept override { return (rows_ + cols_) * rank_; }

  void sample_grad(std::size_t i, std::span<const double> x, std::span<double> out) const override;
  double sample_loss(std::size_t i, std::span<const double> x) const override;
  /// Small random factors; the origin is a saddle point.
  std::vector<double> initial_point(std::uint64_t seed) const override;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::size_t rank_;
  std::vector<Entry> entries_;
};

}  // namespace dpsgd::problems
