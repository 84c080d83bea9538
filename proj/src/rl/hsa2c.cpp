#include "dpsgd/rl/hsa2c.hpp"

#include <atomic>
#include <deque>
#include <memory>
#include <mutex>
#include <numeric>

#include "dpsgd/engine/runtime.hpp"
#include "dpsgd/engine/thread_team.hpp"
#include "dpsgd/error.hpp"
#include "dpsgd/shared_slab.hpp"

namespace dpsgd::rl {

void RlParams::validate() const {
  env.validate();
  if (t_max == 0) throw ConfigError("rl: t_max must be positive");
  if (minibatch == 0) throw ConfigError("rl: minibatch must be positive");
  if (max_env_steps == 0) throw ConfigError("rl: max_env_steps must be positive");
}

namespace {

class EpisodeLog {
 public:
  void add(const std::vector<double>& returns) {
    if (returns.empty()) return;
    std::lock_guard lock(mu_);
    for (double r : returns) {
      recent_.push_back(r);
      if (recent_.size() > 100) recent_.pop_front();
      ++count_;
    }
  }
  std::uint64_t count() const {
    std::lock_guard lock(mu_);
    return count_;
  }
  double mean() const {
    std::lock_guard lock(mu_);
    if (recent_.empty()) return 0.0;
    return std::accumulate(recent_.begin(), recent_.end(), 0.0) / static_cast<double>(recent_.size());
  }

 private:
  mutable std::mutex mu_;
  std::deque<double> recent_;
  std::uint64_t count_ = 0;
};

struct Shared {
  EpisodeLog log;
  std::atomic<std::uint64_t> env_steps{0};
};

void worker_body(const engine::RunConfig& config, const RlParams& rl, Shared& shared, engine::WorkerEndpoint& link) {
  const AcLayout layout{rl.env.states()};
  const std::size_t dim = layout.dim();
  const std::uint32_t id = link.worker_id();
  const double eta = config.effective_eta();
  SharedSlab slab(dim);
  engine::ThreadTeam team(config.p);
  auto acc = std::make_unique<std::atomic<double>[]>(dim);
  std::atomic<std::uint64_t> tickets{0};
  std::atomic<std::uint64_t> local_updates{0};
  std::vector<Episode> episodes(config.p, Episode{rl.env.start, 0, 0.0});
  std::vector<std::vector<double>> uhat(config.p, std::vector<double>(dim));
  std::vector<std::vector<double>> grad(config.p, std::vector<double>(dim));
  std::vector<std::vector<double>> batch(config.p, std::vector<double>(dim));

  for (std::uint64_t pass = 0;; ++pass) {
    std::optional<engine::Snapshot> base = link.pull();
    if (!base) break;
    if (base->v->dim() != dim) throw ConfigError("hsa2c: model dimension does not match the environment");
    slab.assign(base->v->values());
    for (std::size_t k = 0; k < dim; ++k) acc[k].store(0.0, std::memory_order_relaxed);
    tickets.store(0);
    local_updates.store(0);

    team.run([&](std::uint32_t tid) {
      Stream rng = engine::sample_stream(config.seed, id, tid, pass);
      auto& u = uhat[tid];
      auto& g = grad[tid];
      auto& b = batch[tid];
      while (local_updates.load() < config.B) {
        slab.read(u);
        const Trajectory traj = rollout(rl.env, layout, u, rl.t_max, rng, episodes[tid]);
        shared.env_steps.fetch_add(traj.steps.size());
        shared.log.add(traj.finished_returns);
        const std::vector<double> returns = kstep_returns(traj, rl.env.gamma);
        ac_gradients(layout, traj, returns, u, g);
        engine::simulate_gradient_cost(config);
        if (local_updates.load() >= config.B) break;
        for (std::size_t k = 0; k < dim; ++k) {
          if (g[k] != 0.0) acc[k].fetch_add(g[k], std::memory_order_relaxed);
        }
        // The thread holding the m-th ticket of a mini-batch applies it.
        if (tickets.fetch_add(1) % rl.minibatch == rl.minibatch - 1) {
          for (std::size_t k = 0; k < dim; ++k) b[k] = acc[k].exchange(0.0, std::memory_order_relaxed);
          slab.write_step(b, eta);
          local_updates.fetch_add(1);
        }
      }
    });

    UpdateVector update = make_update_vector(slab, *base->v, base->version, id);
    link.push(std::move(update), static_cast<double>(config.B) * rl.minibatch * engine::virtual_step_cost_us(config));
  }
}

}  // namespace

RlResult run_hsa2c(const engine::RunConfig& config, const RlParams& rl) {
  rl.validate();
  const AcLayout layout{rl.env.states()};
  Shared shared;
  RlResult result;
  engine::MasterHooks hooks;
  hooks.on_update = [&](const engine::Progress& p) {
    result.points.push_back({p.t, p.wall_clock_s, shared.env_steps.load(), shared.log.count(), shared.log.mean()});
  };
  hooks.should_stop = [&](const engine::Progress&) { return shared.env_steps.load() >= rl.max_env_steps; };
  engine::MasterResult r = engine::run_cluster(
      config, ParamVector(layout.dim()),
      [&](engine::WorkerEndpoint& link) { worker_body(config, rl, shared, link); }, hooks);
  result.params = std::move(r.v).release();
  result.stats = std::move(r.stats);
  result.env_steps = shared.env_steps.load();
  result.episodes = shared.log.count();
  return result;
}

std::vector<std::vector<double>> run_a2c_reference(const RlParams& rl, double eta, std::uint64_t iterations,
                                                   std::uint64_t seed) {
  rl.validate();
  const AcLayout layout{rl.env.states()};
  std::vector<double> theta(layout.dim(), 0.0);
  std::vector<double> g(layout.dim());
  Episode episode{rl.env.start, 0, 0.0};
  std::vector<std::vector<double>> path;
  path.reserve(iterations);
  for (std::uint64_t t = 0; t < iterations; ++t) {
    Stream rng{seed, 0, 0, t};
    const Trajectory traj = rollout(rl.env, layout, theta, rl.t_max, rng, episode);
    const std::vector<double> returns = kstep_returns(traj, rl.env.gamma);
    ac_gradients(layout, traj, returns, theta, g);
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= eta * g[k];
    path.push_back(theta);
  }
  return path;
}

}  // namespace dpsgd::rl
