#pragma once

#include <cstdint>
#include <vector>

#include "dpsgd/engine/config.hpp"
#include "dpsgd/engine/master.hpp"
#include "dpsgd/rl/actor_critic.hpp"
#include "dpsgd/rl/gridworld.hpp"

namespace dpsgd::rl {

/// RL settings layered on a RunConfig (the engine's eta, rho, p, B, M, nW
/// and seed apply unchanged).
struct RlParams {
  GridWorld env;
  std::uint32_t t_max = 5;            // rollout length per gradient
  std::uint32_t minibatch = 1;        // m: gradients accumulated per local update
  std::uint64_t max_env_steps = 200000;

  void validate() const;
};

struct RlPoint {
  std::uint64_t t = 0;
  double wall_clock_s = 0.0;
  std::uint64_t env_steps = 0;
  std::uint64_t episodes = 0;
  /// Mean undiscounted return of the last min(100, episodes) episodes.
  double mean_return_last_100 = 0.0;
};

struct RlResult {
  std::vector<double> params;
  std::vector<RlPoint> points;
  engine::MasterStats stats;
  std::uint64_t env_steps = 0;
  std::uint64_t episodes = 0;
};

/// HSA2C on the engine. Each worker runs p threads over a shared lock-free
/// (theta, theta_v) slab; every thread rolls out its own episode, adds its
/// gradient to a shared mini-batch accumulator, and the thread that
/// completes a mini-batch of m gradients applies u <- u - eta * sum. After B
/// such local updates the pass ends and the worker pushes u - v. The run ends
/// after config.T global updates or once max_env_steps is reached. Parameters
/// start at zero (the uniform policy).
RlResult run_hsa2c(const engine::RunConfig& config, const RlParams& rl);

/// Single-stream A2C: for t in [0, iterations) roll out with Stream{seed, 0, 0, t}
/// from the current parameters and step theta <- theta - eta * grad. Returns
/// the parameters after every iteration.
std::vector<std::vector<double>> run_a2c_reference(const RlParams& rl, double eta, std::uint64_t iterations,
                                                   std::uint64_t seed);

}  // namespace dpsgd::rl
