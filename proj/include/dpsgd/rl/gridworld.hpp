#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dpsgd::rl {

enum Action : std::uint32_t { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr std::uint32_t kActions = 4;

struct Step {
  std::uint32_t next;
  double reward;
  bool terminal;
};

/// Deterministic grid with cells numbered row-major. Moving into a wall keeps
/// the agent in place. The step that enters the goal earns goal_reward (and
/// ends the episode); every other step earns step_reward.
struct GridWorld {
  std::uint32_t rows = 5;
  std::uint32_t cols = 5;
  std::uint32_t start = 0;
  std::uint32_t goal = 24;
  double step_reward = -0.01;
  double goal_reward = 1.0;
  double gamma = 0.99;
  std::uint32_t max_episode_steps = 100;

  /// Square grid from (0, 0) to the opposite corner.
  static GridWorld square(std::uint32_t side);

  std::uint32_t states() const noexcept { return rows * cols; }
  Step step(std::uint32_t cell, std::uint32_t action) const;
  /// Throws ConfigError on an empty grid, out-of-range cells, start == goal,
  /// gamma outside (0, 1] or a zero episode cap.
  void validate() const;
};

/// Optimal state values V*(s) = max_a r(s, a) + gamma V*(s') with V*(goal) = 0,
/// by value iteration to a max change below `tol`.
std::vector<double> optimal_values(const GridWorld& env, double tol = 1e-13);

/// Undiscounted return of the greedy policy for optimal_values from the start
/// cell (ties broken by the lowest action index), capped at the episode limit.
double optimal_return(const GridWorld& env);

/// Expected return from the start cell under the stochastic policy
/// probs[s * kActions + a], discounted by `gamma`, with the episode cap
/// (finite-horizon policy evaluation).
double evaluate_policy(const GridWorld& env, std::span<const double> probs, double gamma);

}  // namespace dpsgd::rl
