#include "dpsgd/engine/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dpsgd/error.hpp"

namespace dpsgd::engine {

double rho_corollary1(double f0_minus_fstar, double A, double alpha, std::uint64_t T, std::uint64_t M,
                      std::uint64_t Btilde) {
  if (!(f0_minus_fstar > 0.0) || !(A > 0.0) || !(alpha > 0.0) || T == 0 || M == 0 || Btilde == 0) {
    throw ConfigError("rho_corollary1: all inputs must be positive");
  }
  const double tmb = static_cast<double>(T) * static_cast<double>(M) * static_cast<double>(Btilde);
  const double rho_sq = std::sqrt(f0_minus_fstar) / (A * alpha * std::sqrt(tmb));
  return std::sqrt(rho_sq);
}

double rho_rescale(double rho_base, std::uint64_t p, std::uint64_t B, std::uint64_t M, std::uint64_t p2,
                   std::uint64_t B2, std::uint64_t M2) {
  if (!(rho_base > 0.0) || p == 0 || B == 0 || M == 0 || p2 == 0 || B2 == 0 || M2 == 0) {
    throw ConfigError("rho_rescale: inputs must be positive");
  }
  const double base = static_cast<double>(p) * static_cast<double>(B) * static_cast<double>(M);
  const double next = static_cast<double>(p2) * static_cast<double>(B2) * static_cast<double>(M2);
  // sqrt(sqrt(.)) is exact for perfect fourth powers, pow(., 0.25) is not guaranteed to be.
  return rho_base * std::sqrt(std::sqrt(base / next));
}

namespace {

template <class... Args>
std::string fmt(const char* pattern, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

}  // namespace

std::vector<std::string> feasibility_warnings(const RunConfig& c) {
  std::vector<std::string> out;
  const TheoryParams& th = c.theory;
  const double eta = c.effective_eta();
  const double M = c.M;
  const double Bt = static_cast<double>(c.local_steps());
  const double L = th.L;
  const double mu = th.mu;
  const double D = static_cast<double>(th.D);

  // Delay condition, checked over the first iterations of the schedule.
  if (c.delay.max_staleness) {
    const std::uint64_t Dp = *c.delay.max_staleness;
    double worst = 0.0;
    const std::uint64_t horizon = std::min<std::uint64_t>(c.T, 1000);
    for (std::uint64_t t = 1; t <= horizon; ++t) {
      double ahead = 0.0;
      for (std::uint64_t n = 1; n <= Dp; ++n) ahead += c.rho_at(t + n);
      const double lhs = M * M * Bt * Bt * eta * eta * L * L * c.rho_at(t - 1) * static_cast<double>(Dp) * ahead;
      worst = std::max(worst, lhs);
    }
    if (worst > 1.0) out.push_back(fmt("delay condition violated: M^2 B~^2 eta^2 L^2 rho D' sum(rho) = %.6g > 1", worst));
  }

  // Overwrite condition on mu.
  if (!(mu > 0.0) || mu == 1.0) {
    out.push_back(fmt("overwrite condition: mu = %.6g must be positive and != 1", mu));
  } else {
    const double geom = (std::pow(mu, D + 1.0) - 1.0) / (mu - 1.0);
    const double denom = 1.0 - eta - 9.0 * eta * (D + 1.0) * L * L * geom;
    if (!(denom > 0.0)) {
      out.push_back(fmt("overwrite condition violated: 1 - eta - 9 eta (D+1) L^2 (mu^(D+1)-1)/(mu-1) = %.6g <= 0",
                        denom));
    } else if (1.0 / denom > mu) {
      out.push_back(fmt("overwrite condition violated: 1 / (...) = %.6g > mu = %.6g", 1.0 / denom, mu));
    }
  }
  if (mu > 0.0 && mu < 1.0 && th.A > 0.0 && th.alpha > 0.0 && th.f0_minus_fstar > 0.0) {
    const double a2 = th.A * th.A * th.alpha * th.alpha;
    const double Dp = c.delay.max_staleness ? static_cast<double>(*c.delay.max_staleness) : 0.0;
    const double t1 = M * Bt * L * L * Dp * Dp * th.f0_minus_fstar / a2;
    const double inner = mu * (mu - 1.0) + 9.0 * L * L * mu * (D + 1.0) * (std::pow(mu, D + 1.0) - 1.0);
    const double t2 = th.f0_minus_fstar * std::pow(inner, 4) / (M * Bt * a2 * std::pow(mu - 1.0, 8));
    const double need = std::max(t1, t2);
    if (static_cast<double>(c.T) < need) {
      out.push_back(fmt("T = %.6g is below the iteration count %.6g required for the constant-rate bound",
                        static_cast<double>(c.T), need));
    }
  }
  return out;
}

}  // namespace dpsgd::engine
