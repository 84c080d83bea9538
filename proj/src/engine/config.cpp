#include "dpsgd/engine/config.hpp"

#include <cmath>
#include <string>

#include "dpsgd/engine/schedules.hpp"
#include "dpsgd/error.hpp"

namespace dpsgd::engine {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

double DelayModel::sample_latency_us(Stream& rng) const {
  switch (kind) {
    case DelayKind::kNone:
      return 0.0;
    case DelayKind::kFixed:
      return latency_us;
    case DelayKind::kUniform:
      return lo_us + (hi_us - lo_us) * rng.uniform();
    case DelayKind::kSeededJitter: {
      double u = rng.uniform();
      while (u <= 0.0) u = rng.uniform();
      return latency_us - jitter_us * std::log(u);
    }
  }
  return 0.0;
}

void DelayModel::validate() const {
  require(std::isfinite(latency_us) && latency_us >= 0.0, "delay: latency_us must be finite and >= 0");
  require(std::isfinite(jitter_us) && jitter_us >= 0.0, "delay: jitter_us must be finite and >= 0");
  if (kind == DelayKind::kUniform) {
    require(std::isfinite(lo_us) && std::isfinite(hi_us) && lo_us >= 0.0 && hi_us >= lo_us,
            "delay: uniform needs 0 <= lo_us <= hi_us");
  }
  require(!enforce || max_staleness.has_value(), "delay: enforce requires D_prime_bound");
}

double RunConfig::effective_eta() const {
  if (rho_schedule.kind == RhoKind::kCorollary1) {
    return rho_corollary1(theory.f0_minus_fstar, theory.A, theory.alpha, T, M, local_steps());
  }
  return eta;
}

double RunConfig::rho_at(std::uint64_t t) const {
  const RhoSchedule& s = rho_schedule;
  switch (s.kind) {
    case RhoKind::kConstant:
      return s.rho;
    case RhoKind::kCorollary1:
      return rho_corollary1(theory.f0_minus_fstar, theory.A, theory.alpha, T, M, local_steps());
    case RhoKind::kRescaled:
      return rho_rescale(s.rho_base, s.base_p, s.base_B, s.base_M, p, B, M);
    case RhoKind::kRobbinsMonro:
      return std::pow(s.tau0 + static_cast<double>(t), -s.kappa);
  }
  return s.rho;
}

void RunConfig::validate() const {
  require(T >= 1, "T must be >= 1");
  require(M >= 1, "M must be >= 1");
  require(nW >= 1, "nW must be >= 1");
  require(p >= 1, "p must be >= 1");
  require(B >= 1, "B must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(metrics_every >= 1, "metrics_every must be >= 1");
  require(std::isfinite(sim_grad_cost_us) && sim_grad_cost_us >= 0.0, "sim_grad_cost_us must be >= 0");
  delay.validate();
  const RhoSchedule& s = rho_schedule;
  switch (s.kind) {
    case RhoKind::kConstant:
      require(positive_finite(s.rho), "rho_schedule: rho must be > 0");
      require(positive_finite(eta), "eta must be > 0");
      break;
    case RhoKind::kCorollary1:
      require(positive_finite(theory.f0_minus_fstar) && positive_finite(theory.A) && positive_finite(theory.alpha),
              "theory: f0_minus_fstar, A and alpha must be > 0");
      break;
    case RhoKind::kRescaled:
      require(positive_finite(s.rho_base), "rho_schedule: rho_base must be > 0");
      require(s.base_p >= 1 && s.base_B >= 1 && s.base_M >= 1, "rho_schedule: base p, B, M must be >= 1");
      require(positive_finite(eta), "eta must be > 0");
      break;
    case RhoKind::kRobbinsMonro:
      require(positive_finite(s.tau0) && std::isfinite(s.kappa) && s.kappa > 0.0,
              "rho_schedule: tau0 and kappa must be > 0");
      require(positive_finite(eta), "eta must be > 0");
      break;
  }
  // Throws for inputs the formulas reject.
  (void)effective_eta();
  (void)rho_at(0);
}

std::string to_string(DelayKind kind) {
  switch (kind) {
    case DelayKind::kNone: return "none";
    case DelayKind::kFixed: return "fixed";
    case DelayKind::kUniform: return "uniform";
    case DelayKind::kSeededJitter: return "seeded-jitter";
  }
  return "?";
}

std::string to_string(RhoKind kind) {
  switch (kind) {
    case RhoKind::kConstant: return "constant";
    case RhoKind::kCorollary1: return "corollary1";
    case RhoKind::kRescaled: return "rescaled";
    case RhoKind::kRobbinsMonro: return "robbins_monro";
  }
  return "?";
}

std::string to_string(StalenessPolicy policy) {
  return policy == StalenessPolicy::kDrop ? "drop" : "block-worker";
}

}  // namespace dpsgd::engine
