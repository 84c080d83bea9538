#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dpsgd/engine/config.hpp"
#include "dpsgd/engine/transport.hpp"
#include "dpsgd/param_vector.hpp"

namespace dpsgd::engine {

struct MasterStats {
  std::uint64_t iterations = 0;         // global updates applied (t)
  std::uint64_t pushes_received = 0;    // PUSH messages, dropped ones included
  std::uint64_t updates_applied = 0;
  std::uint64_t updates_dropped = 0;    // staleness above the bound with enforcement on
  std::uint64_t staleness_violations = 0;  // staleness above the bound, enforcement off (applied anyway)
  std::uint64_t pulls_served = 0;
  std::uint64_t effective_gradients = 0;   // updates_applied * p * B
  std::uint64_t max_applied_staleness = 0;
  std::uint64_t malformed_frames = 0;
  /// staleness_histogram[s] = applied updates with staleness s.
  std::vector<std::uint64_t> staleness_histogram;
  /// Wall time of the run minus time spent inside the on_update hook.
  double wall_clock_s = 0.0;
};

/// State visible to hooks after each global update.
struct Progress {
  std::uint64_t t;
  const ParamVector& v;
  const MasterStats& stats;
  double wall_clock_s;
  /// The update vectors just applied, in aggregation order.
  std::span<const UpdateVector> applied;
};

struct MasterHooks {
  /// Called after every global update. Its running time is excluded from
  /// the reported wall clock.
  std::function<void(const Progress&)> on_update;
  /// Ends the run early when it returns true (checked after on_update).
  std::function<bool(const Progress&)> should_stop;
};

struct MasterResult {
  ParamVector v;
  MasterStats stats;
};

/// Runs T global updates, each aggregating the first M update vectors to
/// arrive, then broadcasts SHUTDOWN. Throws TransportError when every worker
/// disconnects before T updates; `partial` (if given) then holds the stats.
MasterResult run_master(const RunConfig& config, MasterEndpoint& link, ParamVector v0, const MasterHooks& hooks = {},
                        MasterStats* partial = nullptr);

}  // namespace dpsgd::engine
