#include "dpsgd/problems/oracle.hpp"

#include <string>

#include "dpsgd/error.hpp"
#include "dpsgd/kernels.hpp"
#include "dpsgd/problems/builtin.hpp"

namespace dpsgd::problems {

namespace {

void check_point(const GradOracle& oracle, const ParamVector& x) {
  if (x.dim() != oracle.dim()) {
    throw ConfigError("oracle " + std::string(oracle.name()) + ": point has dimension " + std::to_string(x.dim()) +
                      ", expected " + std::to_string(oracle.dim()));
  }
}

void check_index(const GradOracle& oracle, std::size_t i) {
  if (i >= oracle.samples()) {
    throw ConfigError("oracle " + std::string(oracle.name()) + ": sample index " + std::to_string(i) +
                      " out of range [0, " + std::to_string(oracle.samples()) + ")");
  }
}

}  // namespace

void GradOracle::batch_grad(std::span<const std::size_t> indices, std::span<const double> x,
                            std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  if (indices.empty()) return;
  std::vector<double> g(out.size());
  for (std::size_t i : indices) {
    sample_grad(i, x, g);
    kernels::add(g, out);
  }
  const double count = static_cast<double>(indices.size());
  for (double& v : out) v /= count;
}

std::vector<double> GradOracle::initial_point(std::uint64_t) const { return std::vector<double>(dim(), 0.0); }

std::vector<double> grad_at(const GradOracle& oracle, std::size_t i, const ParamVector& x) {
  check_point(oracle, x);
  check_index(oracle, i);
  std::vector<double> g(oracle.dim());
  oracle.sample_grad(i, x.values(), g);
  return g;
}

std::vector<double> grad_at(const GradOracle& oracle, std::span<const std::size_t> indices, const ParamVector& x) {
  check_point(oracle, x);
  if (indices.empty()) throw ConfigError("grad_at: empty index set");
  for (std::size_t i : indices) check_index(oracle, i);
  std::vector<double> g(oracle.dim());
  oracle.batch_grad(indices, x.values(), g);
  return g;
}

std::vector<double> full_grad(const GradOracle& oracle, const ParamVector& x) {
  check_point(oracle, x);
  std::vector<double> sum(oracle.dim(), 0.0);
  std::vector<double> g(oracle.dim());
  for (std::size_t i = 0; i < oracle.samples(); ++i) {
    oracle.sample_grad(i, x.values(), g);
    kernels::add(g, sum);
  }
  const double n = static_cast<double>(oracle.samples());
  for (double& v : sum) v /= n;
  return sum;
}

double loss_at(const GradOracle& oracle, const ParamVector& x) {
  check_point(oracle, x);
  double sum = 0.0;
  for (std::size_t i = 0; i < oracle.samples(); ++i) sum += oracle.sample_loss(i, x.values());
  return sum / static_cast<double>(oracle.samples());
}

std::shared_ptr<const GradOracle> make_oracle(const ProblemSpec& spec) {
  if (spec.n == 0) throw ConfigError("problem: n must be positive");
  if (spec.name == "quadratic") {
    if (spec.dim == 0) throw ConfigError("problem: dim must be positive");
    return std::make_shared<QuadraticOracle>(QuadraticOracle::generate(spec.n, spec.dim, spec.scale, spec.data_seed));
  }
  if (spec.name == "sigmoid") {
    if (spec.dim == 0) throw ConfigError("problem: dim must be positive");
    if (spec.noise < 0.0 || spec.noise > 0.5) throw ConfigError("problem: sigmoid label flip must be in [0, 0.5]");
    return std::make_shared<SigmoidOracle>(
        SigmoidOracle::generate(spec.n, spec.dim, spec.scale, spec.noise, spec.l2, spec.data_seed));
  }
  if (spec.name == "matrix_factorization") {
    if (spec.rank == 0 || spec.dim % spec.rank != 0 || spec.dim / spec.rank <= spec.rows) {
      throw ConfigError("problem: matrix_factorization needs dim = (rows + cols) * rank with cols >= 1");
    }
    const std::size_t cols = spec.dim / spec.rank - spec.rows;
    return std::make_shared<MatrixFactorizationOracle>(
        MatrixFactorizationOracle::generate(spec.rows, cols, spec.rank, spec.n, spec.noise, spec.data_seed));
  }
  throw ConfigError("problem: unknown oracle '" + spec.name + "'");
}

}  // namespace dpsgd::problems
