#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpsgd/engine/config.hpp"

namespace dpsgd::engine {

/// Equal constant local and global rate
///   rho^2 = eta^2 = sqrt(f(v0) - f*) / (A * alpha * sqrt(T * M * Btilde)).
/// Throws ConfigError on a nonpositive input.
double rho_corollary1(double f0_minus_fstar, double A, double alpha, std::uint64_t T, std::uint64_t M,
                      std::uint64_t Btilde);

/// Rate moved from configuration (p, B, M) to (p2, B2, M2):
///   rho * (p B M / (p2 B2 M2))^(1/4).
double rho_rescale(double rho_base, std::uint64_t p, std::uint64_t B, std::uint64_t M, std::uint64_t p2,
                   std::uint64_t B2, std::uint64_t M2);

/// Human-readable warnings when the theory constants violate the step-size
/// conditions under which the ergodic rate holds, or when T is below the
/// iteration count those conditions demand. Empty when all checks pass.
std::vector<std::string> feasibility_warnings(const RunConfig& config);

}  // namespace dpsgd::engine
