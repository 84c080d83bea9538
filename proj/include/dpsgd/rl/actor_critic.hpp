#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dpsgd/rl/gridworld.hpp"
#include "dpsgd/rng.hpp"

namespace dpsgd::rl {

/// Softmax-linear policy and linear value function over one-hot cell
/// features, flattened into one vector: theta[s * kActions + a] first, then
/// theta_v[s] starting at split().
struct AcLayout {
  std::uint32_t states = 0;

  std::size_t split() const noexcept { return static_cast<std::size_t>(states) * kActions; }
  std::size_t dim() const noexcept { return split() + states; }
};

/// pi(. | s) into `out` (size kActions).
void policy_probs(const AcLayout& layout, std::span<const double> params, std::uint32_t state,
                  std::span<double> out);
double state_value(const AcLayout& layout, std::span<const double> params, std::uint32_t state);

struct Transition {
  std::uint32_t state;
  std::uint32_t action;
  double reward;
};

/// A k-step segment. `bootstrap` is 0 after a terminal step and V(s_next)
/// otherwise.
struct Trajectory {
  std::vector<Transition> steps;
  double bootstrap = 0.0;
  bool terminal = false;
  /// Undiscounted returns of the episodes that ended inside this segment.
  std::vector<double> finished_returns;
};

/// Episode in progress; persists across rollouts.
struct Episode {
  std::uint32_t cell = 0;
  std::uint32_t length = 0;
  double total = 0.0;
};

/// Samples up to t_max actions from pi, advancing `episode`. Stops early at a
/// terminal step or when the episode cap truncates the episode (which
/// restarts it at env.start and bootstraps from the last reached cell).
Trajectory rollout(const GridWorld& env, const AcLayout& layout, std::span<const double> params,
                   std::uint32_t t_max, Stream& rng, Episode& episode);

/// R_i = r_i + gamma R_{i+1}, seeded with the bootstrap value.
std::vector<double> kstep_returns(const Trajectory& traj, double gamma);

/// Gradient of the surrogate loss
///   L = -sum_i log pi(a_i | s_i) * A_i + sum_i (R_i - V(s_i))^2
/// with A_i = R_i - V(s_i) and R_i held constant. A descent step on L ascends
/// the policy objective and fits the critic. `out` has layout.dim() entries.
void ac_gradients(const AcLayout& layout, const Trajectory& traj, std::span<const double> returns,
                  std::span<const double> params, std::span<double> out);

/// The surrogate L itself at `params`, with the advantages fixed at
/// `advantages` (finite-difference checks differentiate this).
double surrogate_loss(const AcLayout& layout, const Trajectory& traj, std::span<const double> returns,
                      std::span<const double> advantages, std::span<const double> params);

}  // namespace dpsgd::rl
