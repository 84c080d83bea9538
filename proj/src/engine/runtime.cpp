#include "dpsgd/engine/runtime.hpp"

#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "dpsgd/engine/inproc.hpp"
#include "dpsgd/error.hpp"

namespace dpsgd::engine {

namespace {

template <class Connect>
MasterResult drive(const RunConfig& config, MasterEndpoint& master, ParamVector v0, const WorkerBody& body,
                   const MasterHooks& hooks, Connect connect) {
  std::mutex error_mu;
  std::exception_ptr worker_error;
  std::vector<std::thread> threads;
  threads.reserve(config.nW);
  for (std::uint32_t w = 0; w < config.nW; ++w) {
    threads.emplace_back([&, w] {
      try {
        auto link = connect(w);
        try {
          body(*link);
        } catch (...) {
          link->close();
          throw;
        }
        link->close();
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!worker_error) worker_error = std::current_exception();
      }
    });
  }
  std::exception_ptr master_error;
  std::optional<MasterResult> result;
  try {
    result.emplace(run_master(config, master, std::move(v0), hooks));
  } catch (...) {
    master_error = std::current_exception();
  }
  for (auto& t : threads) t.join();
  if (worker_error) std::rethrow_exception(worker_error);
  if (master_error) std::rethrow_exception(master_error);
  return std::move(*result);
}

}  // namespace

MasterResult run_cluster(const RunConfig& config, ParamVector v0, const WorkerBody& body, const MasterHooks& hooks) {
  config.validate();
  if (config.transport == TransportKind::kTcp) {
    TcpMasterEndpoint master(HostPort{"127.0.0.1", 0}, config.nW);
    const HostPort addr{"127.0.0.1", master.port()};
    return drive(config, master, std::move(v0), body, hooks, [&](std::uint32_t w) {
      return std::make_unique<TcpWorkerEndpoint>(addr, w, config.delay, config.seed);
    });
  }
  InProcNetwork net(config.nW, config.delay, config.ordering, config.seed);
  return drive(config, net.master(), std::move(v0), body, hooks, [&](std::uint32_t w) { return net.connect(w); });
}

MasterResult run_dpsgd(const RunConfig& config, const problems::GradOracle& oracle, const MasterHooks& hooks,
                       const WorkerOptions& options) {
  ParamVector v0(oracle.initial_point(config.seed));
  return run_cluster(
      config, std::move(v0), [&](WorkerEndpoint& link) { run_worker(config, oracle, link, options); }, hooks);
}

MasterResult run_tcp_master(const RunConfig& config, const HostPort& listen, ParamVector v0,
                            const MasterHooks& hooks) {
  config.validate();
  TcpMasterEndpoint master(listen, config.nW);
  return run_master(config, master, std::move(v0), hooks);
}

std::uint64_t run_tcp_worker(const RunConfig& config, const problems::GradOracle& oracle, const HostPort& master,
                             std::uint32_t worker_id, const WorkerOptions& options) {
  config.validate();
  TcpWorkerEndpoint link(master, worker_id, config.delay, config.seed);
  return run_worker(config, oracle, link, options);
}

}  // namespace dpsgd::engine
