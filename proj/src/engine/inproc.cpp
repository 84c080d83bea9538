#include "dpsgd/engine/inproc.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "dpsgd/error.hpp"

namespace dpsgd::engine {

namespace {

constexpr std::uint64_t kUpTag = 0x7570;
constexpr std::uint64_t kDownTag = 0x646F776E;

std::chrono::steady_clock::duration micros(double us) {
  return std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double, std::micro>(us));
}

}  // namespace

class InProcNetwork::Master final : public MasterEndpoint {
 public:
  explicit Master(InProcNetwork& net) : net_(net) {}

  std::uint32_t workers() const override { return net_.workers_; }

  std::optional<Inbound> receive() override {
    std::unique_lock lock(net_.mu_);
    for (;;) {
      if (net_.shutdown_) return std::nullopt;
      bool blocked = false;
      bool any_live = false;
      std::size_t best = net_.lanes_.size();
      for (std::size_t w = 0; w < net_.lanes_.size(); ++w) {
        const Lane& lane = net_.lanes_[w];
        if (lane.state != WorkerState::kDone) any_live = true;
        if (lane.up.empty()) {
          if (lane.state == WorkerState::kComputing) blocked = true;
          continue;
        }
        if (best == net_.lanes_.size() || earlier(lane.up.front(), net_.lanes_[best].up.front())) best = w;
      }
      if (net_.ordering_ == Ordering::kVirtual) {
        if (!blocked && best < net_.lanes_.size()) return pop(best);
        if (!blocked && !any_live) return std::nullopt;
        if (!blocked) throw TransportError("in-process transport: every live worker is waiting for a reply");
        net_.cv_.wait(lock);
        continue;
      }
      if (best < net_.lanes_.size()) {
        const auto due = net_.lanes_[best].up.front().due;
        if (due <= Clock::now()) return pop(best);
        net_.cv_.wait_until(lock, due);
        continue;
      }
      if (!any_live) return std::nullopt;
      net_.cv_.wait(lock);
    }
  }

  void send_model(std::uint32_t worker, const Snapshot& snapshot) override {
    std::lock_guard lock(net_.mu_);
    if (worker >= net_.lanes_.size()) throw TransportError("send_model: unknown worker " + std::to_string(worker));
    Lane& lane = net_.lanes_[worker];
    if (lane.state == WorkerState::kDone) return;
    const double lat = net_.delay_.sample_latency_us(lane.down_rng);
    const double vt = std::max(net_.master_vtime_ + lat, lane.last_down_vtime);
    lane.last_down_vtime = vt;
    lane.down.push_back({vt, Clock::now() + micros(lat), snapshot});
    lane.state = WorkerState::kComputing;
    net_.cv_.notify_all();
  }

  void shutdown() override {
    std::lock_guard lock(net_.mu_);
    net_.shutdown_ = true;
    for (Lane& lane : net_.lanes_) {
      lane.up.clear();
      lane.down.push_back({net_.master_vtime_, Clock::now(), std::nullopt});
    }
    net_.cv_.notify_all();
  }

 private:
  // Virtual ordering compares (vtime, worker); arrival ordering compares due times.
  bool earlier(const UpMsg& a, const UpMsg& b) const {
    if (net_.ordering_ == Ordering::kVirtual) {
      return a.vtime < b.vtime || (a.vtime == b.vtime && a.msg.worker < b.msg.worker);
    }
    return a.due < b.due;
  }

  Inbound pop(std::size_t w) {
    Lane& lane = net_.lanes_[w];
    UpMsg m = std::move(lane.up.front());
    lane.up.pop_front();
    net_.master_vtime_ = std::max(net_.master_vtime_, m.vtime);
    if (std::holds_alternative<wire::PullReq>(m.msg.msg) && lane.state != WorkerState::kDone) {
      lane.state = WorkerState::kAwaiting;
    }
    return std::move(m.msg);
  }

  InProcNetwork& net_;
};

class InProcNetwork::Worker final : public WorkerEndpoint {
 public:
  Worker(InProcNetwork& net, std::uint32_t id) : net_(net), id_(id) {}
  ~Worker() override { close(); }

  std::uint32_t worker_id() const override { return id_; }

  std::optional<Snapshot> pull() override {
    if (closed_) return std::nullopt;
    net_.send_up(id_, vtime_, Inbound{id_, wire::PullReq{id_}});
    auto reply = net_.wait_down(id_);
    if (!reply || !reply->snapshot) {
      close();
      return std::nullopt;
    }
    vtime_ = std::max(vtime_, reply->vtime);
    return std::move(reply->snapshot);
  }

  void push(UpdateVector update, double compute_us) override {
    if (closed_) return;
    vtime_ += compute_us;
    update.worker_id = id_;
    net_.send_up(id_, vtime_, Inbound{id_, wire::Push{std::move(update)}});
  }

  void close() override {
    if (closed_) return;
    closed_ = true;
    net_.close_worker(id_);
  }

 private:
  InProcNetwork& net_;
  std::uint32_t id_;
  double vtime_ = 0.0;
  bool closed_ = false;
};

InProcNetwork::InProcNetwork(std::uint32_t workers, DelayModel delay, Ordering ordering, std::uint64_t seed)
    : workers_(workers), delay_(std::move(delay)), ordering_(ordering) {
  if (workers == 0) throw ConfigError("in-process transport: need at least one worker");
  delay_.validate();
  lanes_.reserve(workers);
  for (std::uint32_t w = 0; w < workers; ++w) {
    lanes_.push_back(Lane{{}, {}, WorkerState::kComputing, 0.0, 0.0, Stream{seed, kUpTag, w}, Stream{seed, kDownTag, w}});
  }
  master_ = std::make_unique<Master>(*this);
}

InProcNetwork::~InProcNetwork() = default;

MasterEndpoint& InProcNetwork::master() noexcept { return *master_; }

std::unique_ptr<WorkerEndpoint> InProcNetwork::connect(std::uint32_t worker_id) {
  std::lock_guard lock(mu_);
  if (worker_id >= workers_) throw ConfigError("in-process transport: worker id out of range");
  if (lanes_[worker_id].connected) throw ConfigError("in-process transport: worker already connected");
  lanes_[worker_id].connected = true;
  return std::make_unique<Worker>(*this, worker_id);
}

void InProcNetwork::send_up(std::uint32_t w, double send_vtime, Inbound msg) {
  Lane& lane = lanes_[w];
  // The latency stream belongs to the worker thread; sample outside the lock.
  const double lat = delay_.sample_latency_us(lane.up_rng);
  std::lock_guard lock(mu_);
  if (shutdown_) return;
  const double vt = std::max(send_vtime + lat, lane.last_up_vtime);
  lane.last_up_vtime = vt;
  lane.up.push_back({vt, Clock::now() + micros(lat), std::move(msg)});
  cv_.notify_all();
}

// GCC 11 reports the moved-from shared_ptr inside the optional as
// uninitialized here; the value is always constructed before it is read.
#if defined(__GNUC__) && !defined(__clang__)
#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wuninitialized"
#pragma GCC diagnostic ignored "-Wmaybe-uninitialized"
#endif
std::optional<InProcNetwork::DownMsg> InProcNetwork::wait_down(std::uint32_t w) {
  std::unique_lock lock(mu_);
  Lane& lane = lanes_[w];
  for (;;) {
    if (!lane.down.empty()) {
      const DownMsg& front = lane.down.front();
      if (ordering_ == Ordering::kVirtual || !front.snapshot || front.due <= Clock::now()) {
        std::optional<DownMsg> m(std::in_place, std::move(lane.down.front()));
        lane.down.pop_front();
        return m;
      }
      cv_.wait_until(lock, front.due);
      continue;
    }
    cv_.wait(lock);
  }
}

#if defined(__GNUC__) && !defined(__clang__)
#pragma GCC diagnostic pop
#endif

void InProcNetwork::close_worker(std::uint32_t w) {
  std::lock_guard lock(mu_);
  lanes_[w].state = WorkerState::kDone;
  cv_.notify_all();
}

}  // namespace dpsgd::engine
