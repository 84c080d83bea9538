#include "dpsgd/problems/builtin.hpp"

#include <algorithm>
#include <cmath>

#include "dpsgd/error.hpp"
#include "dpsgd/kernels.hpp"
#include "dpsgd/rng.hpp"

namespace dpsgd::problems {

// ---------------------------------------------------------------------------
// Quadratic

QuadraticOracle::QuadraticOracle(std::size_t dim, std::vector<double> centers, double box_radius)
    : dim_(dim), n_(dim ? centers.size() / dim : 0), centers_(std::move(centers)), box_radius_(box_radius) {
  if (dim_ == 0 || n_ == 0 || centers_.size() != n_ * dim_) {
    throw ConfigError("QuadraticOracle: centers must be a non-empty n x dim array");
  }
}

QuadraticOracle QuadraticOracle::generate(std::size_t n, std::size_t dim, double spread, std::uint64_t seed) {
  Stream rng{seed, 0x51ADULL};
  std::vector<double> centers(n * dim);
  for (double& c : centers) c = spread * rng.normal();
  return QuadraticOracle(dim, std::move(centers));
}

std::optional<double> QuadraticOracle::gradient_bound() const {
  double max_center = 0.0;
  for (std::size_t i = 0; i < n_; ++i) max_center = std::max(max_center, std::sqrt(kernels::norm_sq(center(i))));
  return box_radius_ * std::sqrt(static_cast<double>(dim_)) + max_center;
}

void QuadraticOracle::sample_grad(std::size_t i, std::span<const double> x, std::span<double> out) const {
  kernels::sub(x, center(i), out);
}

double QuadraticOracle::sample_loss(std::size_t i, std::span<const double> x) const {
  const auto c = center(i);
  double s = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) s += (x[k] - c[k]) * (x[k] - c[k]);
  return 0.5 * s;
}

std::vector<double> QuadraticOracle::minimizer() const {
  std::vector<double> mean(dim_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) kernels::add(center(i), mean);
  for (double& m : mean) m /= static_cast<double>(n_);
  return mean;
}

// ---------------------------------------------------------------------------
// Sigmoid

namespace {

// 1 / (1 + exp(z)) without overflow.
double logistic_tail(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

// max |d^2/dz^2 (1 / (1 + e^z))| = 1 / (6 sqrt 3)
constexpr double kSigmoidCurvature = 0.09622504486493763;

}  // namespace

SigmoidOracle::SigmoidOracle(std::size_t dim, std::vector<double> features, std::vector<double> labels, double l2,
                             double box_radius)
    : dim_(dim),
      n_(labels.size()),
      features_(std::move(features)),
      labels_(std::move(labels)),
      l2_(l2),
      box_radius_(box_radius) {
  if (dim_ == 0 || n_ == 0 || features_.size() != n_ * dim_) {
    throw ConfigError("SigmoidOracle: features must be n x dim with one label per row");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    const std::span<const double> a{features_.data() + i * dim_, dim_};
    max_feature_norm_ = std::max(max_feature_norm_, std::sqrt(kernels::norm_sq(a)));
  }
}

SigmoidOracle SigmoidOracle::generate(std::size_t n, std::size_t dim, double scale, double flip, double l2,
                                      std::uint64_t seed) {
  Stream rng{seed, 0x516DULL};
  std::vector<double> teacher(dim);
  for (double& w : teacher) w = rng.normal();
  const double feature_sd = scale / std::sqrt(static_cast<double>(dim));
  std::vector<double> features(n * dim);
  std::vector<double> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<double> a{features.data() + i * dim, dim};
    for (double& v : a) v = feature_sd * rng.normal();
    double y = kernels::dot(a, teacher) >= 0.0 ? 1.0 : -1.0;
    if (rng.uniform() < flip) y = -y;
    labels[i] = y;
  }
  return SigmoidOracle(dim, std::move(features), std::move(labels), l2);
}

std::optional<double> SigmoidOracle::gradient_bound() const {
  return 0.25 * max_feature_norm_ + l2_ * box_radius_ * std::sqrt(static_cast<double>(dim_));
}

std::optional<double> SigmoidOracle::smoothness() const {
  return kSigmoidCurvature * max_feature_norm_ * max_feature_norm_ + l2_;
}

void SigmoidOracle::sample_grad(std::size_t i, std::span<const double> x, std::span<double> out) const {
  const std::span<const double> a{features_.data() + i * dim_, dim_};
  const double y = labels_[i];
  const double f = logistic_tail(y * kernels::dot(a, x));
  const double coef = -f * (1.0 - f) * y;
  for (std::size_t k = 0; k < dim_; ++k) out[k] = coef * a[k] + l2_ * x[k];
}

double SigmoidOracle::sample_loss(std::size_t i, std::span<const double> x) const {
  const std::span<const double> a{features_.data() + i * dim_, dim_};
  return logistic_tail(labels_[i] * kernels::dot(a, x)) + 0.5 * l2_ * kernels::norm_sq(x);
}

// ---------------------------------------------------------------------------
// Matrix factorization

MatrixFactorizationOracle::MatrixFactorizationOracle(std::size_t rows, std::size_t cols, std::size_t rank,
                                                     std::vector<Entry> entries)
    : rows_(rows), cols_(cols), rank_(rank), entries_(std::move(entries)) {
  if (rows_ == 0 || cols_ == 0 || rank_ == 0 || entries_.empty()) {
    throw ConfigError("MatrixFactorizationOracle: shape and entries must be non-empty");
  }
  for (const auto& e : entries_) {
    if (e.row >= rows_ || e.col >= cols_) throw ConfigError("MatrixFactorizationOracle: entry out of range");
  }
}

MatrixFactorizationOracle MatrixFactorizationOracle::generate(std::size_t rows, std::size_t cols, std::size_t rank,
                                                              std::size_t n, double noise, std::uint64_t seed) {
  Stream rng{seed, 0x3FULL};
  std::vector<double> u(rows * rank), w(cols * rank);
  for (double& v : u) v = rng.normal();
  for (double& v : w) v = rng.normal();
  std::vector<Entry> entries;
  entries.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t r = rng.below(rows);
    const std::size_t c = rng.below(cols);
    double m = 0.0;
    for (std::size_t j = 0; j < rank; ++j) m += u[r * rank + j] * w[c * rank + j];
    entries.push_back({r, c, m + noise * rng.normal()});
  }
  return MatrixFactorizationOracle(rows, cols, rank, std::move(entries));
}

void MatrixFactorizationOracle::sample_grad(std::size_t i, std::span<const double> x, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const Entry& e = entries_[i];
  const double* ur = x.data() + e.row * rank_;
  const double* wc = x.data() + (rows_ + e.col) * rank_;
  double pred = 0.0;
  for (std::size_t j = 0; j < rank_; ++j) pred += ur[j] * wc[j];
  const double err = pred - e.value;
  double* gu = out.data() + e.row * rank_;
  double* gw = out.data() + (rows_ + e.col) * rank_;
  for (std::size_t j = 0; j < rank_; ++j) {
    gu[j] = err * wc[j];
    gw[j] = err * ur[j];
  }
}

double MatrixFactorizationOracle::sample_loss(std::size_t i, std::span<const double> x) const {
  const Entry& e = entries_[i];
  double pred = 0.0;
  for (std::size_t j = 0; j < rank_; ++j) pred += x[e.row * rank_ + j] * x[(rows_ + e.col) * rank_ + j];
  return 0.5 * (pred - e.value) * (pred - e.value);
}

std::vector<double> MatrixFactorizationOracle::initial_point(std::uint64_t seed) const {
  Stream rng{seed, 0x1317ULL};
  std::vector<double> x(dim());
  for (double& v : x) v = 0.1 * rng.normal();
  return x;
}

}  // namespace dpsgd::problems
