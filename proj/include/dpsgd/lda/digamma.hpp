#pragma once

#include <span>
#include <vector>

namespace dpsgd::lda {

/// psi(x) for x > 0: upward recurrence to x >= 10, then the asymptotic
/// series. Absolute error below 1e-13 on [1e-2, 1e3]. Throws DomainError for
/// x <= 0 or non-finite x.
double digamma(double x);

/// E[log theta_k] under Dirichlet(param): psi(param_k) - psi(sum param).
/// Throws DomainError if an entry is not positive.
std::vector<double> dirichlet_expectation(std::span<const double> param);

}  // namespace dpsgd::lda
