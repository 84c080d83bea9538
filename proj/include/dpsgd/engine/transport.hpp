#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <variant>

#include "dpsgd/engine/wire.hpp"
#include "dpsgd/param_vector.hpp"

namespace dpsgd::engine {

/// A published global model. The vector is immutable once shared.
struct Snapshot {
  std::uint64_t version = 0;
  std::shared_ptr<const ParamVector> v;
};

/// Worker-to-master message as seen by the master.
struct Inbound {
  std::uint32_t worker = 0;
  std::variant<wire::PullReq, wire::Push> msg;
};

class MasterEndpoint {
 public:
  virtual ~MasterEndpoint() = default;

  virtual std::uint32_t workers() const = 0;
  /// Next message in delivery order. Blocks; nullopt once every worker is gone.
  virtual std::optional<Inbound> receive() = 0;
  virtual void send_model(std::uint32_t worker, const Snapshot& snapshot) = 0;
  /// Broadcasts SHUTDOWN. Pending and later worker messages are discarded.
  virtual void shutdown() = 0;
  /// Frames rejected by the codec (always 0 in process).
  virtual std::uint64_t malformed_frames() const { return 0; }
};

class WorkerEndpoint {
 public:
  virtual ~WorkerEndpoint() = default;

  virtual std::uint32_t worker_id() const = 0;
  /// Sends PULL_REQ and waits for the model. nullopt on SHUTDOWN.
  virtual std::optional<Snapshot> pull() = 0;
  /// Sends PUSH. `compute_us` is the simulated time spent since the last pull,
  /// used by the virtual-time transport to order events.
  virtual void push(UpdateVector update, double compute_us) = 0;
  /// The worker will not send again. Idempotent.
  virtual void close() = 0;
};

}  // namespace dpsgd::engine
