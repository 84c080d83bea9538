#include "dpsgd/engine/worker.hpp"

#include <chrono>
#include <thread>
#include <vector>

#include "dpsgd/engine/thread_team.hpp"
#include "dpsgd/error.hpp"

namespace dpsgd::engine {

Stream sample_stream(std::uint64_t seed, std::uint32_t worker, std::uint32_t thread, std::uint64_t pass) {
  return Stream{seed, worker, thread, pass};
}

void simulate_gradient_cost(const RunConfig& config) {
  if (config.cost_mode == CostMode::kNone || config.sim_grad_cost_us <= 0.0) return;
  const auto cost = std::chrono::duration<double, std::micro>(config.sim_grad_cost_us);
  if (config.cost_mode == CostMode::kSleep) {
    std::this_thread::sleep_for(cost);
    return;
  }
  const auto until = std::chrono::steady_clock::now() + std::chrono::duration_cast<std::chrono::nanoseconds>(cost);
  while (std::chrono::steady_clock::now() < until) {
  }
}

double virtual_step_cost_us(const RunConfig& config) { return std::max(config.sim_grad_cost_us, 1.0); }

namespace {

template <Slab S>
std::uint64_t worker_loop(const RunConfig& config, const problems::GradOracle& oracle, WorkerEndpoint& link,
                          const WorkerOptions& options, S& slab) {
  const std::uint32_t id = link.worker_id();
  const std::size_t dim = oracle.dim();
  const std::size_t n = oracle.samples();
  const double eta = config.effective_eta();
  ThreadTeam team(config.p);
  std::vector<std::vector<double>> uhat(config.p, std::vector<double>(dim));
  std::vector<std::vector<double>> grad(config.p, std::vector<double>(dim));
  std::vector<std::vector<std::size_t>> batch(config.p, std::vector<std::size_t>(config.batch_size));

  std::uint64_t pass = 0;
  for (;; ++pass) {
    std::optional<Snapshot> base = link.pull();
    if (!base) break;
    if (base->v->dim() != dim) throw ConfigError("worker: model dimension does not match the oracle");
    slab.assign(base->v->values());

    team.run([&](std::uint32_t tid) {
      Stream rng = sample_stream(config.seed, id, tid, pass);
      auto& u = uhat[tid];
      auto& g = grad[tid];
      auto& idx = batch[tid];
      for (std::uint64_t b = 0; b < config.B; ++b) {
        slab.read(u);
        for (auto& i : idx) i = rng.below(n);
        if (idx.size() == 1) {
          oracle.sample_grad(idx[0], u, g);
        } else {
          oracle.batch_grad(idx, u, g);
        }
        simulate_gradient_cost(config);
        slab.write_step(g, eta);
      }
    });

    UpdateVector update = make_update_vector(slab, *base->v, base->version, id);
    if (options.on_pass) {
      OverwriteTrace trace;
      const OverwriteTrace* tp = nullptr;
      if constexpr (std::is_same_v<S, TracedSlab>) {
        trace = slab.trace();
        tp = &trace;
      }
      options.on_pass(PassRecord{id, pass, *base, update, tp});
    }
    link.push(std::move(update), static_cast<double>(config.B) * virtual_step_cost_us(config));
  }
  return pass;
}

}  // namespace

std::uint64_t run_worker(const RunConfig& config, const problems::GradOracle& oracle, WorkerEndpoint& link,
                         const WorkerOptions& options) {
  if (config.trace_overwrites) {
    TracedSlab slab(oracle.dim(), config.local_steps());
    return worker_loop(config, oracle, link, options, slab);
  }
  SharedSlab slab(oracle.dim());
  return worker_loop(config, oracle, link, options, slab);
}

}  // namespace dpsgd::engine
