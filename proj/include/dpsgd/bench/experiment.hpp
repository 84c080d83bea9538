#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dpsgd/bench/analysis.hpp"
#include "dpsgd/bench/config_io.hpp"
#include "dpsgd/bench/metrics.hpp"

namespace dpsgd::bench {

/// The run configurations of a sweep. With rescale_rho and a constant base
/// rho, every run gets the rescaled schedule from the base (p, B, M).
std::vector<engine::RunConfig> expand_sweep(const ExperimentSpec& spec);

struct RunSummary {
  std::size_t index = 0;
  engine::RunConfig config;
  double rho = 0.0;  // rho_t of the run (constant across t for the sweep schedules)
  bool ok = false;
  std::string error;
  std::string csv;
  double wall_clock_s = 0.0;
  std::uint64_t messages = 0;
  std::uint64_t effective_gradients = 0;
  double throughput = 0.0;
  double final_loss = 0.0;
  double mean_grad_norm_sq = 0.0;
  std::optional<double> time_to_target;
  std::optional<double> tsp;
  std::vector<std::uint64_t> staleness_histogram;
};

struct SlopeSummary {
  std::uint32_t nW = 0, p = 0, M = 0;
  std::uint64_t B = 0;
  SlopeFit fit;
};

struct ExperimentSummary {
  std::vector<RunSummary> runs;
  std::vector<SlopeSummary> slopes;
  json spec;

  json to_json() const;
};

/// Runs the sweep in order, writing run_<i>.csv per run and summary.json to
/// out_dir (created if needed). A failed run is recorded and the sweep
/// continues. Slopes of mean |grad f|^2 against T * M * p * B are fitted for
/// every (nW, p, B, M) group with at least three T values.
ExperimentSummary run_experiment(const ExperimentSpec& spec, const std::string& out_dir);

/// Single DPSGD run: metrics.csv and summary.json in out_dir.
RunSummary run_single(const engine::RunConfig& config, const std::string& out_dir);

struct SviRunOutput {
  lda::SviResult result;
  double topic_recovery = -1.0;  // only for synthetic corpora
};

/// LDA run (DPSVI or serial): svi.csv and summary.json in out_dir.
SviRunOutput run_svi(const SviSpec& spec, const std::string& out_dir);

/// HSA2C run: rl.csv and summary.json in out_dir.
rl::RlResult run_rl(const RlSpec& spec, const std::string& out_dir);

}  // namespace dpsgd::bench
