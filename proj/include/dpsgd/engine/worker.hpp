#pragma once

#include <cstdint>
#include <functional>

#include "dpsgd/engine/config.hpp"
#include "dpsgd/engine/transport.hpp"
#include "dpsgd/problems/oracle.hpp"
#include "dpsgd/shared_slab.hpp"

namespace dpsgd::engine {

/// One completed worker pass, handed to WorkerOptions::on_pass.
struct PassRecord {
  std::uint32_t worker;
  std::uint64_t pass;
  const Snapshot& base;
  const UpdateVector& update;
  /// Set when the run traces overwrites.
  const OverwriteTrace* trace;
};

struct WorkerOptions {
  /// Called on the worker thread after each pass, before the push.
  std::function<void(const PassRecord&)> on_pass;
};

/// Stream for thread `thread` of worker `worker` in pass `pass`; its counter
/// indexes the steps of the pass.
Stream sample_stream(std::uint64_t seed, std::uint32_t worker, std::uint32_t thread, std::uint64_t pass);

/// Spends the configured per-gradient compute cost (sleep or busy-wait).
void simulate_gradient_cost(const RunConfig& config);
/// Virtual duration of one local gradient: max(sim_grad_cost_us, 1).
double virtual_step_cost_us(const RunConfig& config);

/// Worker loop: pull v into the slab, run p threads of B lock-free steps
///   read u^ -> pick i -> g = grad f_i(u^) -> u <- u - eta g
/// join, push u - v; repeat until SHUTDOWN. Returns the number of passes.
std::uint64_t run_worker(const RunConfig& config, const problems::GradOracle& oracle, WorkerEndpoint& link,
                         const WorkerOptions& options = {});

}  // namespace dpsgd::engine
