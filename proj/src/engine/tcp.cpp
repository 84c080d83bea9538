#include "dpsgd/engine/tcp.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>

#include "dpsgd/error.hpp"

namespace dpsgd::engine {

namespace {

constexpr auto kCloseGrace = std::chrono::seconds(2);

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

bool write_all(int fd, const std::vector<std::uint8_t>& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

// false on a clean EOF before the first byte; throws on a partial read.
bool read_exact(int fd, std::uint8_t* buf, std::size_t len) {
  std::size_t off = 0;
  while (off < len) {
    const ssize_t n = ::recv(fd, buf + off, len - off, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n == 0 && off == 0) return false;
    if (n <= 0) throw wire::WireError("truncated frame");
    off += static_cast<std::size_t>(n);
  }
  return true;
}

// nullopt on a clean EOF between frames.
std::optional<wire::Message> read_frame(int fd) {
  std::uint8_t header[wire::kHeaderSize];
  if (!read_exact(fd, header, sizeof header)) return std::nullopt;
  const wire::FrameHeader h = wire::decode_header(header);
  std::vector<std::uint8_t> payload(h.payload_len);
  if (h.payload_len && !read_exact(fd, payload.data(), payload.size())) throw wire::WireError("truncated frame");
  return wire::decode_payload(h.type, payload);
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

addrinfo* resolve(const HostPort& hp, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(hp.port);
  const int rc = ::getaddrinfo(hp.host.empty() ? nullptr : hp.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) throw TransportError("cannot resolve " + hp.host + ": " + ::gai_strerror(rc));
  return res;
}

}  // namespace

HostPort parse_host_port(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 == text.size()) {
    throw ConfigError("expected host:port, got '" + text + "'");
  }
  HostPort hp;
  hp.host = text.substr(0, colon);
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("port");
  } catch (const std::exception&) {
    throw ConfigError("bad port in '" + text + "'");
  }
  if (port > 65535) throw ConfigError("port out of range in '" + text + "'");
  hp.port = static_cast<std::uint16_t>(port);
  return hp;
}

// ---------------------------------------------------------------------------
// Master side

TcpMasterEndpoint::TcpMasterEndpoint(const HostPort& listen, std::uint32_t workers)
    : workers_(workers), worker_fd_(workers, -1) {
  if (workers == 0) throw ConfigError("tcp transport: need at least one worker");
  addrinfo* res = resolve(listen, true);
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, static_cast<int>(workers) + 4) == 0) {
      listen_fd_ = fd;
      break;
    }
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (listen_fd_ < 0) throw TransportError(sys_error("cannot listen on " + listen.host + ":" + std::to_string(listen.port)));
  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                           : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

TcpMasterEndpoint::~TcpMasterEndpoint() {
  shutdown();
  ::shutdown(listen_fd_, SHUT_RDWR);
  if (acceptor_.joinable()) acceptor_.join();
  {
    // Give workers a moment to read SHUTDOWN and hang up, then force it.
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, kCloseGrace, [this] { return closed_ == accepted_; });
    for (auto& c : conns_) ::shutdown(c->fd, SHUT_RDWR);
  }
  for (auto& c : conns_) {
    if (c->reader.joinable()) c->reader.join();
    ::close(c->fd);
  }
  ::close(listen_fd_);
}

void TcpMasterEndpoint::accept_loop() {
  for (;;) {
    {
      std::lock_guard lock(mu_);
      if (shutdown_ || accepted_ == workers_) return;
    }
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    set_nodelay(fd);
    std::lock_guard lock(mu_);
    if (shutdown_) {
      ::close(fd);
      return;
    }
    auto conn = std::make_unique<Conn>();
    conn->fd = fd;
    const std::size_t index = conns_.size();
    conns_.push_back(std::move(conn));
    ++accepted_;
    conns_[index]->reader = std::thread([this, index] { read_loop(index); });
  }
}

void TcpMasterEndpoint::read_loop(std::size_t index) {
  int fd;
  {
    std::lock_guard lock(mu_);
    fd = conns_[index]->fd;
  }
  std::optional<std::uint32_t> id;
  for (;;) {
    std::optional<wire::Message> msg;
    try {
      msg = read_frame(fd);
    } catch (const wire::WireError&) {
      ++malformed_;
      ::shutdown(fd, SHUT_RDWR);
      break;
    }
    if (!msg) break;
    std::uint32_t from;
    Inbound in;
    if (auto* pr = std::get_if<wire::PullReq>(&*msg)) {
      from = pr->worker_id;
      in.msg = *pr;
    } else if (auto* push = std::get_if<wire::Push>(&*msg)) {
      from = push->update.worker_id;
      in.msg = std::move(*push);
    } else {
      // Workers never send MODEL or SHUTDOWN.
      ++malformed_;
      ::shutdown(fd, SHUT_RDWR);
      break;
    }
    std::lock_guard lock(mu_);
    if (from >= workers_ || (id && *id != from) || (!id && worker_fd_[from] >= 0)) {
      ++malformed_;
      ::shutdown(fd, SHUT_RDWR);
      break;
    }
    if (!id) {
      id = from;
      worker_fd_[from] = fd;
    }
    if (shutdown_) continue;  // drain until the worker hangs up
    in.worker = from;
    inbox_.push_back(std::move(in));
    cv_.notify_all();
  }
  std::lock_guard lock(mu_);
  conns_[index]->alive = false;
  if (id) worker_fd_[*id] = -1;
  ++closed_;
  cv_.notify_all();
}

std::optional<Inbound> TcpMasterEndpoint::receive() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return shutdown_ || !inbox_.empty() || (accepted_ == workers_ && closed_ == accepted_); });
  if (shutdown_ || inbox_.empty()) return std::nullopt;
  Inbound in = std::move(inbox_.front());
  inbox_.pop_front();
  return in;
}

void TcpMasterEndpoint::send_model(std::uint32_t worker, const Snapshot& snapshot) {
  int fd;
  {
    std::lock_guard lock(mu_);
    if (worker >= workers_) throw TransportError("send_model: unknown worker " + std::to_string(worker));
    fd = worker_fd_[worker];
  }
  if (fd < 0) return;  // worker gone; its reader already recorded the loss
  const auto values = snapshot.v->values();
  const auto frame = wire::encode(wire::Model{snapshot.version, {values.begin(), values.end()}});
  if (!write_all(fd, frame)) ::shutdown(fd, SHUT_RDWR);
}

void TcpMasterEndpoint::shutdown() {
  std::vector<int> fds;
  {
    std::lock_guard lock(mu_);
    if (shutdown_) return;
    shutdown_ = true;
    inbox_.clear();
    for (auto& c : conns_) {
      if (c->alive) fds.push_back(c->fd);
    }
    cv_.notify_all();
  }
  const auto frame = wire::encode(wire::Shutdown{});
  for (int fd : fds) {
    write_all(fd, frame);
    ::shutdown(fd, SHUT_WR);
  }
  ::shutdown(listen_fd_, SHUT_RDWR);
}

// ---------------------------------------------------------------------------
// Worker side

TcpWorkerEndpoint::TcpWorkerEndpoint(const HostPort& master, std::uint32_t worker_id, DelayModel delay,
                                     std::uint64_t seed, int retries, std::chrono::milliseconds backoff)
    : id_(worker_id), delay_(std::move(delay)), rng_{seed, 0x746370, worker_id} {
  std::string last_error = "no attempt";
  for (int attempt = 0; attempt <= retries && fd_ < 0; ++attempt) {
    if (attempt) std::this_thread::sleep_for(backoff);
    addrinfo* res = nullptr;
    try {
      res = resolve(master, false);
    } catch (const TransportError& e) {
      last_error = e.what();
      continue;
    }
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
        fd_ = fd;
        break;
      }
      last_error = sys_error("connect");
      ::close(fd);
    }
    ::freeaddrinfo(res);
  }
  if (fd_ < 0) {
    throw TransportError("master " + master.host + ":" + std::to_string(master.port) + " unreachable after " +
                         std::to_string(retries + 1) + " attempts (" + last_error + ")");
  }
  set_nodelay(fd_);
}

TcpWorkerEndpoint::~TcpWorkerEndpoint() { close(); }

void TcpWorkerEndpoint::send(const wire::Message& msg) {
  const double lat = delay_.sample_latency_us(rng_);
  if (lat > 0.0) std::this_thread::sleep_for(std::chrono::duration<double, std::micro>(lat));
  if (!write_all(fd_, wire::encode(msg))) throw TransportError(sys_error("send to master"));
}

std::optional<Snapshot> TcpWorkerEndpoint::pull() {
  if (done_) return std::nullopt;
  send(wire::PullReq{id_});
  std::optional<wire::Message> msg = read_frame(fd_);
  if (!msg) throw TransportError("master closed the connection without SHUTDOWN");
  if (std::holds_alternative<wire::Shutdown>(*msg)) {
    close();
    return std::nullopt;
  }
  auto* model = std::get_if<wire::Model>(&*msg);
  if (!model) throw wire::WireError("unexpected message from master");
  return Snapshot{model->version, std::make_shared<const ParamVector>(std::move(model->values))};
}

void TcpWorkerEndpoint::push(UpdateVector update, double) {
  if (done_) return;
  update.worker_id = id_;
  send(wire::Push{std::move(update)});
}

void TcpWorkerEndpoint::close() {
  if (fd_ < 0) return;
  done_ = true;
  ::close(fd_);
  fd_ = -1;
}

}  // namespace dpsgd::engine
