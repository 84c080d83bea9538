#pragma once

#include <optional>
#include <span>

#include "dpsgd/bench/metrics.hpp"

namespace dpsgd::bench {

/// Time speed-up reference_time / candidate_time at equal solution quality.
/// Throws DomainError unless both times are positive and finite.
double tsp(double reference_time_s, double candidate_time_s);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares of log(y) on log(x). Needs at least 3 points with x spanning
/// at least two decades and all values positive; throws DomainError
/// otherwise. R^2 is 1 for a constant series (the fit is exact).
SlopeFit convergence_slope(std::span<const double> x, std::span<const double> y);

/// First wall_clock_s at which `column` drops to `target` or below.
std::optional<double> time_to_target(const Table& table, const std::string& column, double target);

}  // namespace dpsgd::bench
