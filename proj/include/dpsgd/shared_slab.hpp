#pragma once

// Lock-free shared parameter region of a worker.
//
// Every dimension is an independent 64-bit cell. A write step reads each cell,
// subtracts eta * grad[k] and stores the result with no lock and no CAS, so
// two threads racing on the same cell can lose one contribution. Reads are
// per-cell and may mix values from different steps across dimensions.
//
// SharedSlab is the production data path. TracedSlab has the same contract
// but routes every store through an append-only log so that the overwrite
// masks (which per-dimension writes survived) and the read-mix masks can be
// recovered after the fact.

#include <atomic>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dpsgd/param_vector.hpp"

namespace dpsgd {

template <class S>
concept Slab = requires(S& slab, const S& cslab, std::span<double> out, std::span<const double> in, double eta) {
  { cslab.dim() } -> std::convertible_to<std::size_t>;
  slab.assign(in);
  cslab.read(out);
  cslab.peek(out);
  slab.write_step(in, eta);
};

class SharedSlab {
 public:
  explicit SharedSlab(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }

  /// Overwrites every cell. Meant for pass boundaries; concurrent writers may
  /// still interleave per dimension.
  void assign(std::span<const double> values);

  /// Per-dimension snapshot (torn across dimensions under contention).
  void read(std::span<double> out) const;
  ParamVector read() const;
  /// Same as read(); exists for symmetry with TracedSlab.
  void peek(std::span<double> out) const { read(out); }

  /// cell[k] <- cell[k] - eta * grad[k] for every k, lossy under contention.
  /// Throws NumericFault before touching memory if grad has a non-finite entry.
  void write_step(std::span<const double> grad, double eta);

  double value(std::size_t k) const noexcept { return cells_[k].load(std::memory_order_relaxed); }

 private:
  std::size_t dim_;
  std::unique_ptr<std::atomic<double>[]> cells_;
};

/// Per-step overwrite record recovered from a TracedSlab.
struct TracedStep {
  std::uint64_t step = 0;
  double eta = 0.0;
  std::vector<double> grad;
  /// Log position of this step's store per dimension; stores applied in
  /// increasing position order reproduce the chain of surviving values.
  std::vector<std::uint64_t> write_pos;
  /// S mask: 1 when the store on dimension k is part of the final value.
  std::vector<std::uint8_t> survived;
  /// Index of the first step whose writes were not all complete when this
  /// step's read began (every step j < flushed_prefix had finished).
  std::uint64_t flushed_prefix = 0;
  /// P masks for steps j in [flushed_prefix, step): read_mix[j - flushed_prefix][k]
  /// is 1 when this step's read of dimension k observed step j's store.
  std::vector<std::vector<std::uint8_t>> read_mix;
  /// True when the step was preceded by a read() on the same thread.
  bool has_read = false;
  /// The u^ this step's read returned (empty without a read).
  std::vector<double> read_values;
  /// Value this step stored per dimension.
  std::vector<double> write_values;
};

struct OverwriteTrace {
  std::size_t dim = 0;
  /// Cell values at the last assign() before the traced steps.
  std::vector<double> initial;
  std::vector<TracedStep> steps;

  /// Number of per-dimension writes that were lost to concurrent writers.
  std::size_t lost_writes() const noexcept;
};

class TracedSlab {
 public:
  /// `max_steps` bounds the number of write steps between assign() calls.
  TracedSlab(std::size_t dim, std::size_t max_steps);

  std::size_t dim() const noexcept { return dim_; }

  /// Resets the trace and sets the cells.
  void assign(std::span<const double> values);

  /// Snapshot; also opens a step on the calling thread that the next
  /// write_step on this thread will close.
  void read(std::span<double> out) const;
  ParamVector read() const;
  /// Untraced read for quiescent moments such as the end of a pass.
  void peek(std::span<double> out) const;

  void write_step(std::span<const double> grad, double eta);

  double value(std::size_t k) const noexcept;

  /// Recovers the overwrite trace. Only valid while no thread is writing.
  OverwriteTrace trace() const;

 private:
  struct Entry {
    double value;
    std::uint64_t pred;  // previous log position on the same dimension, kNone for initial values
    std::uint64_t step;
  };
  struct StepSlot {
    double eta = 0.0;
    std::vector<double> grad;
    std::vector<std::uint64_t> read_pos;
    std::vector<std::uint64_t> write_pos;
    std::uint64_t read_event = 0;
    std::uint64_t done_event = 0;
    bool has_read = false;
    std::atomic<bool> complete{false};
  };

  static constexpr std::uint64_t kNone = ~std::uint64_t{0};

  std::uint64_t open_step(bool with_read) const;
  std::uint64_t append(double value, std::uint64_t pred, std::uint64_t step);

  std::size_t dim_;
  std::size_t max_steps_;
  std::unique_ptr<std::atomic<std::uint64_t>[]> heads_;
  std::unique_ptr<Entry[]> log_;
  std::size_t log_capacity_;
  std::atomic<std::uint64_t> log_next_{0};
  mutable std::unique_ptr<StepSlot[]> slots_;
  mutable std::atomic<std::uint64_t> next_step_{0};
  mutable std::atomic<std::uint64_t> events_{0};
  std::vector<double> initial_;
};

/// delta = read(slab) - base. Throws ConfigError on dimension mismatch.
template <Slab S>
UpdateVector make_update_vector(const S& slab, const ParamVector& base, std::uint64_t base_version,
                                std::uint32_t worker_id = 0);

/// Non-template core of make_update_vector.
UpdateVector make_update_vector_from(std::span<const double> local, const ParamVector& base,
                                     std::uint64_t base_version, std::uint32_t worker_id);

template <Slab S>
UpdateVector make_update_vector(const S& slab, const ParamVector& base, std::uint64_t base_version,
                                std::uint32_t worker_id) {
  std::vector<double> local(slab.dim());
  slab.peek(local);
  return make_update_vector_from(local, base, base_version, worker_id);
}

/// v + rho * sum_m updates[m].delta, summing the deltas in order first.
/// Throws ConfigError on dimension mismatch or rho <= 0, NumericFault naming
/// the offending dimension if the result is not finite.
ParamVector apply_global_update(const ParamVector& v, std::span<const UpdateVector> updates, double rho);

}  // namespace dpsgd
