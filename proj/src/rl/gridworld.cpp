#include "dpsgd/rl/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpsgd/error.hpp"

namespace dpsgd::rl {

GridWorld GridWorld::square(std::uint32_t side) {
  GridWorld env;
  env.rows = side;
  env.cols = side;
  env.start = 0;
  env.goal = side * side - 1;
  return env;
}

Step GridWorld::step(std::uint32_t cell, std::uint32_t action) const {
  std::uint32_t r = cell / cols;
  std::uint32_t c = cell % cols;
  switch (action) {
    case kUp:
      if (r > 0) --r;
      break;
    case kDown:
      if (r + 1 < rows) ++r;
      break;
    case kLeft:
      if (c > 0) --c;
      break;
    case kRight:
      if (c + 1 < cols) ++c;
      break;
    default:
      throw ConfigError("gridworld: action out of range");
  }
  const std::uint32_t next = r * cols + c;
  if (next == goal) return {next, goal_reward, true};
  return {next, step_reward, false};
}

void GridWorld::validate() const {
  if (rows == 0 || cols == 0) throw ConfigError("gridworld: rows and cols must be positive");
  if (start >= states() || goal >= states()) throw ConfigError("gridworld: start and goal must be grid cells");
  if (start == goal) throw ConfigError("gridworld: start and goal must differ");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gridworld: gamma must be in (0, 1]");
  if (max_episode_steps == 0) throw ConfigError("gridworld: max_episode_steps must be positive");
  if (!std::isfinite(step_reward) || !std::isfinite(goal_reward)) throw ConfigError("gridworld: rewards must be finite");
}

std::vector<double> optimal_values(const GridWorld& env, double tol) {
  env.validate();
  if (!(env.gamma < 1.0)) throw ConfigError("optimal_values: needs gamma < 1");
  const std::uint32_t S = env.states();
  std::vector<double> v(S, 0.0), next(S, 0.0);
  for (;;) {
    double change = 0.0;
    for (std::uint32_t s = 0; s < S; ++s) {
      if (s == env.goal) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (std::uint32_t a = 0; a < kActions; ++a) {
        const Step st = env.step(s, a);
        best = std::max(best, st.reward + (st.terminal ? 0.0 : env.gamma * v[st.next]));
      }
      next[s] = best;
      change = std::max(change, std::abs(best - v[s]));
    }
    v.swap(next);
    if (change < tol) return v;
  }
}

double optimal_return(const GridWorld& env) {
  const std::vector<double> v = optimal_values(env);
  std::uint32_t s = env.start;
  double total = 0.0;
  for (std::uint32_t t = 0; t < env.max_episode_steps; ++t) {
    std::uint32_t best_a = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint32_t a = 0; a < kActions; ++a) {
      const Step st = env.step(s, a);
      const double q = st.reward + (st.terminal ? 0.0 : env.gamma * v[st.next]);
      if (q > best) {
        best = q;
        best_a = a;
      }
    }
    const Step st = env.step(s, best_a);
    total += st.reward;
    if (st.terminal) break;
    s = st.next;
  }
  return total;
}

double evaluate_policy(const GridWorld& env, std::span<const double> probs, double gamma) {
  env.validate();
  const std::uint32_t S = env.states();
  if (probs.size() != static_cast<std::size_t>(S) * kActions) {
    throw ConfigError("evaluate_policy: probs must be states x actions");
  }
  std::vector<double> v(S, 0.0), next(S, 0.0);
  for (std::uint32_t h = 0; h < env.max_episode_steps; ++h) {
    for (std::uint32_t s = 0; s < S; ++s) {
      double sum = 0.0;
      if (s != env.goal) {
        for (std::uint32_t a = 0; a < kActions; ++a) {
          const Step st = env.step(s, a);
          sum += probs[s * kActions + a] * (st.reward + (st.terminal ? 0.0 : gamma * v[st.next]));
        }
      }
      next[s] = sum;
    }
    v.swap(next);
  }
  return v[env.start];
}

}  // namespace dpsgd::rl
