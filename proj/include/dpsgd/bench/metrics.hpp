#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpsgd/engine/config.hpp"
#include "dpsgd/engine/master.hpp"
#include "dpsgd/lda/svi.hpp"
#include "dpsgd/problems/oracle.hpp"
#include "dpsgd/rl/hsa2c.hpp"

namespace dpsgd::bench {

/// Version written on the first line of every CSV ("# dpsgd-metrics v1 <kind>").
inline constexpr int kCsvSchemaVersion = 1;

/// Named numeric columns. Values print with %.17g so they read back exactly.
struct Table {
  std::string kind;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Throws ConfigError for an unknown column.
  std::vector<double> column(const std::string& name) const;
};

void write_csv(const std::string& path, const Table& table);
/// Throws ParseError on a missing or wrong schema line, ragged rows or
/// non-numeric cells.
Table read_csv(const std::string& path);

/// One sample of a DPSGD run, taken every metrics_every global updates and
/// after the last one.
struct MetricsRow {
  double wall_clock_s = 0.0;
  std::uint64_t t = 0;
  double grad_norm_sq = 0.0;   // |grad f(v_t)|^2 with the full gradient
  double loss = 0.0;
  std::uint64_t messages_sent = 0;   // PUSH messages received so far
  std::uint64_t effective_gradients = 0;
};

struct RunMetrics {
  std::vector<MetricsRow> rows;
  engine::MasterStats stats;
  std::vector<double> final_v;

  /// Mean of grad_norm_sq over the sampled rows (the running average of the
  /// squared gradient norm along the iterates).
  double mean_grad_norm_sq() const;
  /// Effective gradients per second of wall clock (hook time excluded).
  double throughput() const;
};

/// run_dpsgd with full-gradient sampling at v_0 and every metrics_every
/// updates. Sampling time is excluded from the wall clock.
RunMetrics collect_run(const engine::RunConfig& config, const problems::GradOracle& oracle);

Table to_table(const std::vector<MetricsRow>& rows);
Table to_table(const std::vector<lda::SviPoint>& points);
Table to_table(const std::vector<rl::RlPoint>& points);

}  // namespace dpsgd::bench
