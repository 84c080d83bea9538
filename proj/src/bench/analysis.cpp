#include "dpsgd/bench/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "dpsgd/error.hpp"

namespace dpsgd::bench {

double tsp(double reference_time_s, double candidate_time_s) {
  auto ok = [](double t) { return std::isfinite(t) && t > 0.0; };
  if (!ok(reference_time_s) || !ok(candidate_time_s)) throw DomainError("tsp: times must be positive and finite");
  return reference_time_s / candidate_time_s;
}

SlopeFit convergence_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("convergence_slope: x and y differ in length");
  if (x.size() < 3) throw DomainError("convergence_slope: needs at least 3 points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw DomainError("convergence_slope: values must be positive and finite");
    }
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (std::log10(*hi) - std::log10(*lo) < 2.0 - 1e-9) {
    throw DomainError("convergence_slope: x must span at least two decades");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    const double dy = std::log(y[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

std::optional<double> time_to_target(const Table& table, const std::string& column, double target) {
  const std::vector<double> values = table.column(column);
  const std::vector<double> wall = table.column("wall_clock_s");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] <= target) return wall[i];
  }
  return std::nullopt;
}

}  // namespace dpsgd::bench
