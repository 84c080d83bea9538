#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpsgd/problems/oracle.hpp"
#include "dpsgd/rng.hpp"

namespace dpsgd::engine {

enum class DelayKind { kNone, kFixed, kUniform, kSeededJitter };
enum class StalenessPolicy { kDrop, kBlockWorker };

/// Message latency and staleness bound.
///
/// Latencies are in microseconds. On the virtual-time in-process transport
/// they only order events; elsewhere they are slept in real time.
struct DelayModel {
  DelayKind kind = DelayKind::kNone;
  double latency_us = 0.0;  // fixed latency, and the base of seeded-jitter
  double lo_us = 0.0;       // uniform range
  double hi_us = 0.0;
  double jitter_us = 0.0;   // seeded-jitter: latency_us + jitter_us * Exp(1)
  /// Max staleness D' in master iterations. Unset means unbounded.
  std::optional<std::uint64_t> max_staleness;
  bool enforce = false;
  StalenessPolicy policy = StalenessPolicy::kDrop;

  double sample_latency_us(Stream& rng) const;
  void validate() const;
};

enum class RhoKind { kConstant, kCorollary1, kRescaled, kRobbinsMonro };

/// Global learning rate rho_t of the master.
struct RhoSchedule {
  RhoKind kind = RhoKind::kConstant;
  double rho = 1.0;              // constant
  double rho_base = 0.1;         // rescaled: rate tuned at (base_p, base_B, base_M)
  std::uint64_t base_p = 1;
  std::uint64_t base_B = 1;
  std::uint64_t base_M = 1;
  double tau0 = 1.0;             // robbins_monro: (tau0 + t)^-kappa
  double kappa = 0.7;
};

/// Analysis-side constants. Only used to evaluate the constant-rate law and
/// the feasibility checks; never estimated from data.
struct TheoryParams {
  double f0_minus_fstar = 1.0;
  double A = 1.0;
  double alpha = 1.0;
  double mu = 0.5;
  double L = 1.0;
  std::uint64_t D = 0;  // local overwrite delay bound
};

enum class TransportKind { kInProc, kTcp };
enum class Ordering { kVirtual, kArrival };
enum class CostMode { kNone, kSleep, kBusy };

struct RunConfig {
  std::uint64_t T = 100;        // master iterations
  std::uint32_t M = 1;          // update vectors per master iteration
  std::uint32_t nW = 1;         // workers
  std::uint32_t p = 1;          // threads per worker
  std::uint64_t B = 1;          // local steps per thread per pass
  double eta = 0.1;             // local rate
  RhoSchedule rho_schedule;
  std::uint64_t seed = 42;
  DelayModel delay;
  problems::ProblemSpec problem;
  std::uint32_t batch_size = 1;  // samples per local gradient
  TheoryParams theory;

  /// Simulated per-gradient compute cost. With kSleep or kBusy the worker
  /// spends this long per gradient; in virtual time a gradient always costs
  /// max(sim_grad_cost_us, 1).
  double sim_grad_cost_us = 0.0;
  CostMode cost_mode = CostMode::kNone;

  TransportKind transport = TransportKind::kInProc;
  Ordering ordering = Ordering::kVirtual;

  std::uint64_t metrics_every = 10;  // full-gradient evaluation period
  bool trace_overwrites = false;

  /// Total local steps per pushed update (p * B).
  std::uint64_t local_steps() const noexcept { return static_cast<std::uint64_t>(p) * B; }
  /// Local rate actually used (the constant-rate law overrides eta).
  double effective_eta() const;
  /// rho_t for master iteration t (0-based).
  double rho_at(std::uint64_t t) const;

  /// Throws ConfigError on any invalid field.
  void validate() const;
};

std::string to_string(DelayKind kind);
std::string to_string(RhoKind kind);
std::string to_string(StalenessPolicy policy);

}  // namespace dpsgd::engine
