#pragma once

// In-process transport.
//
// Ordering::kVirtual is a conservative discrete-event schedule: every message
// carries a virtual timestamp (sender clock + sampled latency) and the master
// only consumes the earliest pending message, ties broken by worker id, once
// every worker that could still send something earlier has a message queued.
// Results are then independent of OS scheduling.
//
// Ordering::kArrival sleeps the sampled latency in real time and delivers in
// arrival order.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <vector>

#include "dpsgd/engine/config.hpp"
#include "dpsgd/engine/transport.hpp"
#include "dpsgd/rng.hpp"

namespace dpsgd::engine {

class InProcNetwork {
 public:
  InProcNetwork(std::uint32_t workers, DelayModel delay, Ordering ordering, std::uint64_t seed);
  ~InProcNetwork();

  InProcNetwork(const InProcNetwork&) = delete;
  InProcNetwork& operator=(const InProcNetwork&) = delete;

  MasterEndpoint& master() noexcept;
  /// One endpoint per worker id; call once per id.
  std::unique_ptr<WorkerEndpoint> connect(std::uint32_t worker_id);

 private:
  using Clock = std::chrono::steady_clock;

  enum class WorkerState { kComputing, kAwaiting, kDone };

  struct UpMsg {
    double vtime;
    Clock::time_point due;
    Inbound msg;
  };
  struct DownMsg {
    double vtime;
    Clock::time_point due;
    std::optional<Snapshot> snapshot;  // nullopt = SHUTDOWN
  };
  struct Lane {
    std::deque<UpMsg> up;
    std::deque<DownMsg> down;
    WorkerState state = WorkerState::kComputing;
    double last_up_vtime = 0.0;
    double last_down_vtime = 0.0;
    Stream up_rng;
    Stream down_rng;
    bool connected = false;
  };

  class Master;
  class Worker;

  void send_up(std::uint32_t w, double send_vtime, Inbound msg);
  std::optional<DownMsg> wait_down(std::uint32_t w);
  void close_worker(std::uint32_t w);

  std::uint32_t workers_;
  DelayModel delay_;
  Ordering ordering_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<Lane> lanes_;
  double master_vtime_ = 0.0;
  bool shutdown_ = false;
  std::unique_ptr<Master> master_;
};

}  // namespace dpsgd::engine
