#include "dpsgd/lda/digamma.hpp"

#include <cmath>
#include <string>

#include "dpsgd/error.hpp"

namespace dpsgd::lda {

double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("digamma: argument must be positive, got " + std::to_string(x));
  double shift = 0.0;
  while (x < 10.0) {
    shift += 1.0 / x;
    x += 1.0;
  }
  const double r = 1.0 / (x * x);
  // -sum_k B_2k / (2k x^2k), k = 1..7
  const double series =
      r * (1.0 / 12 - r * (1.0 / 120 - r * (1.0 / 252 - r * (1.0 / 240 - r * (1.0 / 132 - r * (691.0 / 32760 - r / 12))))));
  return std::log(x) - 0.5 / x - series - shift;
}

std::vector<double> dirichlet_expectation(std::span<const double> param) {
  if (param.empty()) throw DomainError("dirichlet_expectation: empty parameter");
  double sum = 0.0;
  for (double a : param) {
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("dirichlet_expectation: entries must be positive");
    sum += a;
  }
  const double psi_sum = digamma(sum);
  std::vector<double> out(param.size());
  for (std::size_t k = 0; k < param.size(); ++k) out[k] = digamma(param[k]) - psi_sum;
  return out;
}

}  // namespace dpsgd::lda
