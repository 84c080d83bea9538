#include "dpsgd/rl/actor_critic.hpp"

#include <algorithm>
#include <cmath>

#include "dpsgd/error.hpp"

namespace dpsgd::rl {

void policy_probs(const AcLayout&, std::span<const double> params, std::uint32_t state,
                  std::span<double> out) {
  const double* logits = params.data() + static_cast<std::size_t>(state) * kActions;
  double top = logits[0];
  for (std::uint32_t a = 1; a < kActions; ++a) top = std::max(top, logits[a]);
  double sum = 0.0;
  for (std::uint32_t a = 0; a < kActions; ++a) {
    out[a] = std::exp(logits[a] - top);
    sum += out[a];
  }
  for (std::uint32_t a = 0; a < kActions; ++a) out[a] /= sum;
}

double state_value(const AcLayout& layout, std::span<const double> params, std::uint32_t state) {
  return params[layout.split() + state];
}

Trajectory rollout(const GridWorld& env, const AcLayout& layout, std::span<const double> params,
                   std::uint32_t t_max, Stream& rng, Episode& episode) {
  if (t_max == 0) throw ConfigError("rollout: t_max must be positive");
  if (params.size() != layout.dim()) throw ConfigError("rollout: parameter dimension mismatch");
  Trajectory traj;
  traj.steps.reserve(t_max);
  double probs[kActions];
  for (std::uint32_t k = 0; k < t_max; ++k) {
    const std::uint32_t s = episode.cell;
    policy_probs(layout, params, s, probs);
    const double u = rng.uniform();
    std::uint32_t a = kActions - 1;
    double cum = 0.0;
    for (std::uint32_t i = 0; i < kActions; ++i) {
      cum += probs[i];
      if (u < cum) {
        a = i;
        break;
      }
    }
    const Step st = env.step(s, a);
    traj.steps.push_back({s, a, st.reward});
    episode.total += st.reward;
    ++episode.length;
    if (st.terminal || episode.length >= env.max_episode_steps) {
      traj.finished_returns.push_back(episode.total);
      traj.terminal = st.terminal;
      traj.bootstrap = st.terminal ? 0.0 : state_value(layout, params, st.next);
      episode = Episode{env.start, 0, 0.0};
      return traj;
    }
    episode.cell = st.next;
  }
  traj.bootstrap = state_value(layout, params, episode.cell);
  return traj;
}

std::vector<double> kstep_returns(const Trajectory& traj, double gamma) {
  std::vector<double> out(traj.steps.size());
  double r = traj.bootstrap;
  for (std::size_t i = traj.steps.size(); i-- > 0;) {
    r = traj.steps[i].reward + gamma * r;
    out[i] = r;
  }
  return out;
}

void ac_gradients(const AcLayout& layout, const Trajectory& traj, std::span<const double> returns,
                  std::span<const double> params, std::span<double> out) {
  if (returns.size() != traj.steps.size()) throw ConfigError("ac_gradients: returns not aligned with trajectory");
  if (params.size() != layout.dim() || out.size() != layout.dim()) {
    throw ConfigError("ac_gradients: parameter dimension mismatch");
  }
  std::fill(out.begin(), out.end(), 0.0);
  double probs[kActions];
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const Transition& tr = traj.steps[i];
    const double adv = returns[i] - state_value(layout, params, tr.state);
    policy_probs(layout, params, tr.state, probs);
    double* g = out.data() + static_cast<std::size_t>(tr.state) * kActions;
    // d/dlogit_b log pi(a) = [a == b] - pi(b)
    for (std::uint32_t b = 0; b < kActions; ++b) g[b] -= ((b == tr.action ? 1.0 : 0.0) - probs[b]) * adv;
    out[layout.split() + tr.state] -= 2.0 * adv;
  }
}

double surrogate_loss(const AcLayout& layout, const Trajectory& traj, std::span<const double> returns,
                      std::span<const double> advantages, std::span<const double> params) {
  double loss = 0.0;
  double probs[kActions];
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const Transition& tr = traj.steps[i];
    policy_probs(layout, params, tr.state, probs);
    const double err = returns[i] - state_value(layout, params, tr.state);
    loss += -std::log(probs[tr.action]) * advantages[i] + err * err;
  }
  return loss;
}

}  // namespace dpsgd::rl
