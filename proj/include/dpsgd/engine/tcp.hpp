#pragma once

// TCP transport speaking the binary frame protocol of wire.hpp.
//
// The master accepts exactly `workers` connections and reads each on its own
// thread. A connection that sends a malformed frame is closed and counted.
// Injected latency is slept by the sender on the worker side only.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dpsgd/engine/config.hpp"
#include "dpsgd/engine/transport.hpp"
#include "dpsgd/rng.hpp"

namespace dpsgd::engine {

struct HostPort {
  std::string host;
  std::uint16_t port = 0;
};

/// "host:port"; throws ConfigError.
HostPort parse_host_port(const std::string& text);

class TcpMasterEndpoint final : public MasterEndpoint {
 public:
  /// Binds and listens immediately; port 0 picks an ephemeral port.
  TcpMasterEndpoint(const HostPort& listen, std::uint32_t workers);
  ~TcpMasterEndpoint() override;

  std::uint16_t port() const noexcept { return port_; }

  std::uint32_t workers() const override { return workers_; }
  std::optional<Inbound> receive() override;
  void send_model(std::uint32_t worker, const Snapshot& snapshot) override;
  void shutdown() override;
  std::uint64_t malformed_frames() const override { return malformed_.load(); }

 private:
  struct Conn {
    int fd = -1;
    std::thread reader;
    bool alive = true;
  };

  void accept_loop();
  void read_loop(std::size_t index);

  std::uint32_t workers_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::thread acceptor_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::unique_ptr<Conn>> conns_;
  std::vector<int> worker_fd_;  // worker id -> fd, -1 when unknown or gone
  std::deque<Inbound> inbox_;
  std::size_t accepted_ = 0;
  std::size_t closed_ = 0;
  bool shutdown_ = false;
  std::atomic<std::uint64_t> malformed_{0};
};

class TcpWorkerEndpoint final : public WorkerEndpoint {
 public:
  /// Connects with bounded retries; throws TransportError when the master
  /// stays unreachable.
  TcpWorkerEndpoint(const HostPort& master, std::uint32_t worker_id, DelayModel delay, std::uint64_t seed,
                    int retries = 50, std::chrono::milliseconds backoff = std::chrono::milliseconds(100));
  ~TcpWorkerEndpoint() override;

  std::uint32_t worker_id() const override { return id_; }
  std::optional<Snapshot> pull() override;
  void push(UpdateVector update, double compute_us) override;
  void close() override;

 private:
  void send(const wire::Message& msg);

  std::uint32_t id_;
  DelayModel delay_;
  Stream rng_;
  int fd_ = -1;
  bool done_ = false;
};

}  // namespace dpsgd::engine
