#include "dpsgd/shared_slab.hpp"

#include <algorithm>
#include <string>

#include "dpsgd/error.hpp"
#include "dpsgd/kernels.hpp"

namespace dpsgd {

namespace {

void require_dim(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw ConfigError(std::string(what) + ": dimension mismatch (expected " + std::to_string(expected) + ", got " +
                      std::to_string(got) + ")");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// SharedSlab

SharedSlab::SharedSlab(std::size_t dim) : dim_(dim), cells_(std::make_unique<std::atomic<double>[]>(dim)) {
  if (dim == 0) throw ConfigError("SharedSlab: dimension must be positive");
}

void SharedSlab::assign(std::span<const double> values) {
  require_dim(dim_, values.size(), "SharedSlab::assign");
  for (std::size_t k = 0; k < dim_; ++k) cells_[k].store(values[k], std::memory_order_relaxed);
}

void SharedSlab::read(std::span<double> out) const {
  require_dim(dim_, out.size(), "SharedSlab::read");
  for (std::size_t k = 0; k < dim_; ++k) out[k] = cells_[k].load(std::memory_order_relaxed);
}

ParamVector SharedSlab::read() const {
  std::vector<double> out(dim_);
  read(out);
  return ParamVector(std::move(out));
}

void SharedSlab::write_step(std::span<const double> grad, double eta) {
  require_dim(dim_, grad.size(), "SharedSlab::write_step");
  require_finite(grad, "SharedSlab::write_step gradient");
  for (std::size_t k = 0; k < dim_; ++k) {
    const double current = cells_[k].load(std::memory_order_relaxed);
    cells_[k].store(current - eta * grad[k], std::memory_order_relaxed);
  }
}

// ---------------------------------------------------------------------------
// TracedSlab

namespace {

struct PendingRead {
  const void* owner = nullptr;
  std::uint64_t step = 0;
};

thread_local PendingRead tl_pending;

}  // namespace

TracedSlab::TracedSlab(std::size_t dim, std::size_t max_steps)
    : dim_(dim),
      max_steps_(max_steps),
      heads_(std::make_unique<std::atomic<std::uint64_t>[]>(dim)),
      log_capacity_((max_steps + 1) * dim),
      slots_(std::make_unique<StepSlot[]>(max_steps)),
      initial_(dim, 0.0) {
  if (dim == 0) throw ConfigError("TracedSlab: dimension must be positive");
  log_ = std::make_unique<Entry[]>(log_capacity_);
  for (std::size_t s = 0; s < max_steps_; ++s) {
    slots_[s].grad.resize(dim);
    slots_[s].read_pos.assign(dim, kNone);
    slots_[s].write_pos.assign(dim, kNone);
  }
  assign(initial_);
}

std::uint64_t TracedSlab::append(double value, std::uint64_t pred, std::uint64_t step) {
  const std::uint64_t pos = log_next_.fetch_add(1, std::memory_order_relaxed);
  if (pos >= log_capacity_) throw Error("TracedSlab: write log capacity exceeded");
  log_[pos] = Entry{value, pred, step};
  return pos;
}

void TracedSlab::assign(std::span<const double> values) {
  require_dim(dim_, values.size(), "TracedSlab::assign");
  log_next_.store(0);
  next_step_.store(0);
  events_.store(0);
  for (std::size_t s = 0; s < max_steps_; ++s) {
    slots_[s].complete.store(false, std::memory_order_relaxed);
    slots_[s].has_read = false;
  }
  initial_.assign(values.begin(), values.end());
  for (std::size_t k = 0; k < dim_; ++k) heads_[k].store(append(values[k], kNone, kNone), std::memory_order_release);
  tl_pending = {};
}

std::uint64_t TracedSlab::open_step(bool with_read) const {
  const std::uint64_t step = next_step_.fetch_add(1);
  if (step >= max_steps_) throw Error("TracedSlab: step capacity exceeded");
  StepSlot& slot = slots_[step];
  slot.has_read = with_read;
  slot.read_event = events_.fetch_add(1);
  return step;
}

void TracedSlab::read(std::span<double> out) const {
  require_dim(dim_, out.size(), "TracedSlab::read");
  const std::uint64_t step = open_step(true);
  StepSlot& slot = slots_[step];
  for (std::size_t k = 0; k < dim_; ++k) {
    const std::uint64_t pos = heads_[k].load(std::memory_order_acquire);
    slot.read_pos[k] = pos;
    out[k] = log_[pos].value;
  }
  tl_pending = {this, step};
}

ParamVector TracedSlab::read() const {
  std::vector<double> out(dim_);
  read(out);
  return ParamVector(std::move(out));
}

void TracedSlab::peek(std::span<double> out) const {
  require_dim(dim_, out.size(), "TracedSlab::peek");
  for (std::size_t k = 0; k < dim_; ++k) out[k] = log_[heads_[k].load(std::memory_order_acquire)].value;
}

void TracedSlab::write_step(std::span<const double> grad, double eta) {
  require_dim(dim_, grad.size(), "TracedSlab::write_step");
  require_finite(grad, "TracedSlab::write_step gradient");
  std::uint64_t step;
  if (tl_pending.owner == this) {
    step = tl_pending.step;
    tl_pending = {};
  } else {
    step = open_step(false);
  }
  StepSlot& slot = slots_[step];
  slot.eta = eta;
  std::copy(grad.begin(), grad.end(), slot.grad.begin());
  for (std::size_t k = 0; k < dim_; ++k) {
    const std::uint64_t seen = heads_[k].load(std::memory_order_acquire);
    const double current = log_[seen].value;
    const std::uint64_t pos = append(current - eta * grad[k], seen, step);
    heads_[k].store(pos, std::memory_order_release);
    slot.write_pos[k] = pos;
  }
  slot.done_event = events_.fetch_add(1);
  slot.complete.store(true, std::memory_order_release);
}

double TracedSlab::value(std::size_t k) const noexcept {
  return log_[heads_[k].load(std::memory_order_acquire)].value;
}

OverwriteTrace TracedSlab::trace() const {
  OverwriteTrace out;
  out.dim = dim_;
  out.initial = initial_;

  const std::uint64_t log_size = log_next_.load();
  std::vector<std::uint8_t> in_final_chain(log_size, 0);
  for (std::size_t k = 0; k < dim_; ++k) {
    for (std::uint64_t pos = heads_[k].load(); pos != kNone; pos = log_[pos].pred) in_final_chain[pos] = 1;
  }

  const std::uint64_t n_steps = std::min<std::uint64_t>(next_step_.load(), max_steps_);
  // Running maximum of completion events over step ids, with incomplete
  // steps treated as never done.
  std::vector<std::uint64_t> done_prefix_max(n_steps);
  std::uint64_t running = 0;
  for (std::uint64_t s = 0; s < n_steps; ++s) {
    const bool done = slots_[s].complete.load(std::memory_order_acquire);
    running = std::max(running, done ? slots_[s].done_event : kNone);
    done_prefix_max[s] = running;
  }

  for (std::uint64_t b = 0; b < n_steps; ++b) {
    const StepSlot& slot = slots_[b];
    if (!slot.complete.load(std::memory_order_acquire)) continue;
    TracedStep step;
    step.step = b;
    step.eta = slot.eta;
    step.grad = slot.grad;
    step.write_pos = slot.write_pos;
    step.survived.resize(dim_);
    step.write_values.resize(dim_);
    for (std::size_t k = 0; k < dim_; ++k) {
      step.survived[k] = in_final_chain[slot.write_pos[k]];
      step.write_values[k] = log_[slot.write_pos[k]].value;
    }
    step.has_read = slot.has_read;
    if (slot.has_read) {
      step.read_values.resize(dim_);
      for (std::size_t k = 0; k < dim_; ++k) step.read_values[k] = log_[slot.read_pos[k]].value;
    }

    if (slot.has_read) {
      // First step id whose running completion event is not before the read.
      const auto first_late = std::partition_point(done_prefix_max.begin(), done_prefix_max.begin() + b,
                                                   [&](std::uint64_t e) { return e < slot.read_event; });
      step.flushed_prefix = static_cast<std::uint64_t>(first_late - done_prefix_max.begin());
      const std::uint64_t a = step.flushed_prefix;
      step.read_mix.assign(b - a, std::vector<std::uint8_t>(dim_, 0));
      for (std::size_t k = 0; k < dim_; ++k) {
        for (std::uint64_t pos = slot.read_pos[k]; pos != kNone; pos = log_[pos].pred) {
          const std::uint64_t writer = log_[pos].step;
          if (writer == kNone) break;
          if (writer >= a && writer < b) step.read_mix[writer - a][k] = 1;
        }
      }
    } else {
      step.flushed_prefix = b;
    }
    out.steps.push_back(std::move(step));
  }
  return out;
}

std::size_t OverwriteTrace::lost_writes() const noexcept {
  std::size_t lost = 0;
  for (const auto& s : steps) lost += static_cast<std::size_t>(std::count(s.survived.begin(), s.survived.end(), 0));
  return lost;
}

// ---------------------------------------------------------------------------
// Update algebra

UpdateVector make_update_vector_from(std::span<const double> local, const ParamVector& base,
                                     std::uint64_t base_version, std::uint32_t worker_id) {
  require_dim(base.dim(), local.size(), "make_update_vector");
  UpdateVector w;
  w.delta.resize(local.size());
  kernels::sub(local, base.values(), w.delta);
  w.base_version = base_version;
  w.worker_id = worker_id;
  return w;
}

ParamVector apply_global_update(const ParamVector& v, std::span<const UpdateVector> updates, double rho) {
  if (!(rho > 0.0)) throw ConfigError("apply_global_update: rho must be positive");
  for (const auto& w : updates) require_dim(v.dim(), w.delta.size(), "apply_global_update");
  std::vector<double> out(v.values().begin(), v.values().end());
  if (!updates.empty()) {
    std::vector<double> sum(updates.front().delta);
    for (std::size_t m = 1; m < updates.size(); ++m) kernels::add(updates[m].delta, sum);
    kernels::axpy(rho, sum, out);
  }
  require_finite(out, "apply_global_update");
  return ParamVector(std::move(out));
}

}  // namespace dpsgd
