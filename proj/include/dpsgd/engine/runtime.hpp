#pragma once

#include <cstdint>
#include <functional>

#include "dpsgd/engine/config.hpp"
#include "dpsgd/engine/master.hpp"
#include "dpsgd/engine/tcp.hpp"
#include "dpsgd/engine/worker.hpp"

namespace dpsgd::engine {

/// Body of one worker thread; returns when the master shuts down.
using WorkerBody = std::function<void(WorkerEndpoint&)>;

/// Runs the master on the calling thread and nW workers on their own threads,
/// connected by the transport named in the config (TCP uses loopback). A
/// worker failure is rethrown after the run is torn down.
MasterResult run_cluster(const RunConfig& config, ParamVector v0, const WorkerBody& body,
                         const MasterHooks& hooks = {});

/// DPSGD on a gradient oracle, starting from oracle.initial_point(seed).
MasterResult run_dpsgd(const RunConfig& config, const problems::GradOracle& oracle, const MasterHooks& hooks = {},
                       const WorkerOptions& options = {});

/// Master role of a multi-process TCP run: waits for nW remote workers.
MasterResult run_tcp_master(const RunConfig& config, const HostPort& listen, ParamVector v0,
                            const MasterHooks& hooks = {});

/// Worker role of a multi-process TCP run. Returns the number of passes.
std::uint64_t run_tcp_worker(const RunConfig& config, const problems::GradOracle& oracle, const HostPort& master,
                             std::uint32_t worker_id, const WorkerOptions& options = {});

}  // namespace dpsgd::engine
