#include "dpsgd/engine/master.hpp"

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "dpsgd/error.hpp"
#include "dpsgd/shared_slab.hpp"

namespace dpsgd::engine {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

MasterResult run_master(const RunConfig& config, MasterEndpoint& link, ParamVector v0, const MasterHooks& hooks,
                        MasterStats* partial) {
  config.validate();
  const auto start = Clock::now();
  const std::uint32_t nW = link.workers();
  const bool block = config.delay.policy == StalenessPolicy::kBlockWorker && config.delay.max_staleness.has_value();
  const std::optional<std::uint64_t> bound = config.delay.max_staleness;

  MasterStats stats;
  double hook_seconds = 0.0;
  auto current = std::make_shared<const ParamVector>(std::move(v0));
  std::uint64_t t = 0;
  std::vector<UpdateVector> batch;
  batch.reserve(config.M);

  // Version each worker is computing on; nullopt when it has no model.
  std::vector<std::optional<std::uint64_t>> inflight(nW);
  // Block policy: pulls that arrive while a full batch waits on slow workers
  // are answered after the update, so the new model is not already stale.
  std::vector<std::uint32_t> held;

  auto serve = [&](std::uint32_t w) {
    link.send_model(w, Snapshot{t, current});
    inflight[w] = t;
    ++stats.pulls_served;
  };

  // Block policy: apply only when no worker still computing on an older model
  // would end up staler than the bound after this update.
  auto ready = [&] {
    if (batch.size() < config.M) return false;
    if (!block) return true;
    for (std::uint32_t w = 0; w < nW; ++w) {
      if (inflight[w] && t + 1 - *inflight[w] > *bound) return false;
    }
    return true;
  };

  auto finish = [&] {
    stats.iterations = t;
    stats.malformed_frames = link.malformed_frames();
    stats.wall_clock_s = seconds_since(start) - hook_seconds;
  };

  try {
    while (t < config.T) {
      std::optional<Inbound> in = link.receive();
      if (!in) throw TransportError("all workers disconnected after " + std::to_string(t) + " of " +
                                    std::to_string(config.T) + " iterations");
      const std::uint32_t w = in->worker;
      if (w >= nW) throw TransportError("message from unknown worker " + std::to_string(w));

      if (std::holds_alternative<wire::PullReq>(in->msg)) {
        if (block && batch.size() >= config.M) {
          held.push_back(w);
        } else {
          serve(w);
        }
        continue;
      }

      UpdateVector update = std::move(std::get<wire::Push>(in->msg).update);
      ++stats.pushes_received;
      inflight[w].reset();
      if (update.delta.size() != current->dim()) {
        throw ConfigError("update from worker " + std::to_string(w) + " has dimension " +
                          std::to_string(update.delta.size()) + ", expected " + std::to_string(current->dim()));
      }
      if (update.base_version > t) throw TransportError("update claims a future base version");
      const std::uint64_t staleness = t - update.base_version;
      if (bound && staleness > *bound) {
        if (config.delay.enforce) {
          ++stats.updates_dropped;
          continue;
        }
        ++stats.staleness_violations;
      }
      if (stats.staleness_histogram.size() <= staleness) stats.staleness_histogram.resize(staleness + 1, 0);
      ++stats.staleness_histogram[staleness];
      stats.max_applied_staleness = std::max(stats.max_applied_staleness, staleness);
      batch.push_back(std::move(update));

      if (!ready()) continue;

      // Exclusive section: a new immutable snapshot replaces the old one, so
      // pulls always see either the previous or the next v.
      current = std::make_shared<const ParamVector>(apply_global_update(*current, batch, config.rho_at(t)));
      ++t;
      stats.updates_applied += batch.size();
      stats.effective_gradients += batch.size() * config.local_steps();
      stats.iterations = t;

      if (hooks.on_update || hooks.should_stop) {
        const auto hook_start = Clock::now();
        const Progress progress{t, *current, stats, seconds_since(start) - hook_seconds, batch};
        if (hooks.on_update) hooks.on_update(progress);
        const bool stop = hooks.should_stop && hooks.should_stop(progress);
        hook_seconds += seconds_since(hook_start);
        if (stop) break;
      }
      batch.clear();
      if (t < config.T) {
        for (std::uint32_t h : held) serve(h);
      }
      held.clear();
    }
  } catch (...) {
    finish();
    if (partial) *partial = stats;
    link.shutdown();
    throw;
  }
  finish();
  link.shutdown();
  return MasterResult{*current, std::move(stats)};
}

}  // namespace dpsgd::engine
