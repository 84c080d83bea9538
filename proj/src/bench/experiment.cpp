#include "dpsgd/bench/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <tuple>

#include "dpsgd/engine/schedules.hpp"
#include "dpsgd/error.hpp"
#include "dpsgd/lda/corpus.hpp"

namespace dpsgd::bench {

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create '" + dir + "': " + ec.message());
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

template <class T>
std::vector<T> axis(const std::vector<T>& values, T base) {
  return values.empty() ? std::vector<T>{base} : values;
}

json run_json(const RunSummary& r) {
  json j = {{"index", r.index},
            {"config", to_json(r.config)},
            {"rho", r.rho},
            {"ok", r.ok},
            {"csv", r.csv},
            {"wall_clock_s", r.wall_clock_s},
            {"messages", r.messages},
            {"effective_gradients", r.effective_gradients},
            {"throughput", r.throughput},
            {"final_loss", r.final_loss},
            {"mean_grad_norm_sq", r.mean_grad_norm_sq},
            {"staleness_histogram", r.staleness_histogram}};
  if (!r.ok) j["error"] = r.error;
  j["time_to_target"] = r.time_to_target ? json(*r.time_to_target) : json(nullptr);
  j["tsp"] = r.tsp ? json(*r.tsp) : json(nullptr);
  return j;
}

json stats_json(const engine::MasterStats& s) {
  return {{"iterations", s.iterations},
          {"pushes_received", s.pushes_received},
          {"updates_applied", s.updates_applied},
          {"updates_dropped", s.updates_dropped},
          {"staleness_violations", s.staleness_violations},
          {"pulls_served", s.pulls_served},
          {"effective_gradients", s.effective_gradients},
          {"max_applied_staleness", s.max_applied_staleness},
          {"malformed_frames", s.malformed_frames},
          {"staleness_histogram", s.staleness_histogram},
          {"wall_clock_s", s.wall_clock_s}};
}

RunSummary execute(std::size_t index, const engine::RunConfig& config, const std::string& csv_path,
                   const std::optional<double>& target) {
  RunSummary r;
  r.index = index;
  r.config = config;
  r.rho = config.rho_at(0);
  r.csv = csv_path;
  const auto oracle = problems::make_oracle(config.problem);
  const RunMetrics m = collect_run(config, *oracle);
  const Table table = to_table(m.rows);
  write_csv(csv_path, table);
  r.ok = true;
  r.wall_clock_s = m.stats.wall_clock_s;
  r.messages = m.stats.pushes_received;
  r.effective_gradients = m.stats.effective_gradients;
  r.throughput = m.throughput();
  r.final_loss = m.rows.empty() ? 0.0 : m.rows.back().loss;
  r.mean_grad_norm_sq = m.mean_grad_norm_sq();
  r.staleness_histogram = m.stats.staleness_histogram;
  r.time_to_target = target ? time_to_target(table, "loss", *target) : std::optional<double>(r.wall_clock_s);
  return r;
}

}  // namespace

std::vector<engine::RunConfig> expand_sweep(const ExperimentSpec& spec) {
  const engine::RunConfig& base = spec.base;
  std::vector<engine::RunConfig> out;
  for (auto nW : axis(spec.nW, base.nW)) {
    for (auto p : axis(spec.p, base.p)) {
      for (auto B : axis(spec.B, base.B)) {
        for (auto M : axis(spec.M, base.M)) {
          for (auto T : axis(spec.T, base.T)) {
            engine::RunConfig c = base;
            c.nW = nW;
            c.p = p;
            c.B = B;
            c.M = M;
            c.T = T;
            if (spec.rescale_rho && base.rho_schedule.kind == engine::RhoKind::kConstant) {
              c.rho_schedule.kind = engine::RhoKind::kRescaled;
              c.rho_schedule.rho_base = base.rho_schedule.rho;
              c.rho_schedule.base_p = base.p;
              c.rho_schedule.base_B = base.B;
              c.rho_schedule.base_M = base.M;
            }
            out.push_back(c);
          }
        }
      }
    }
  }
  return out;
}

json ExperimentSummary::to_json() const {
  json runs_j = json::array();
  for (const auto& r : runs) runs_j.push_back(run_json(r));
  json slopes_j = json::array();
  for (const auto& s : slopes) {
    slopes_j.push_back({{"nW", s.nW},
                        {"p", s.p},
                        {"B", s.B},
                        {"M", s.M},
                        {"slope", s.fit.slope},
                        {"intercept", s.fit.intercept},
                        {"r2", s.fit.r2}});
  }
  return {{"schema_version", kCsvSchemaVersion}, {"spec", spec}, {"runs", runs_j}, {"slopes", slopes_j}};
}

ExperimentSummary run_experiment(const ExperimentSpec& spec, const std::string& out_dir) {
  spec.validate();
  ensure_dir(out_dir);
  ExperimentSummary summary;
  summary.spec = bench::to_json(spec);
  const auto configs = expand_sweep(spec);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const std::string csv = join(out_dir, "run_" + std::to_string(i) + ".csv");
    try {
      configs[i].validate();
      summary.runs.push_back(execute(i, configs[i], csv, spec.target_loss));
    } catch (const std::exception& e) {
      RunSummary r;
      r.index = i;
      r.config = configs[i];
      r.csv = csv;
      r.error = e.what();
      summary.runs.push_back(std::move(r));
    }
  }

  const RunSummary& ref = summary.runs[spec.reference];
  for (auto& r : summary.runs) {
    if (ref.ok && r.ok && ref.time_to_target && r.time_to_target && *ref.time_to_target > 0.0 &&
        *r.time_to_target > 0.0) {
      r.tsp = tsp(*ref.time_to_target, *r.time_to_target);
    }
  }

  std::map<std::tuple<std::uint32_t, std::uint32_t, std::uint64_t, std::uint32_t>, std::vector<const RunSummary*>>
      groups;
  for (const auto& r : summary.runs) {
    if (r.ok) groups[{r.config.nW, r.config.p, r.config.B, r.config.M}].push_back(&r);
  }
  for (const auto& [key, runs] : groups) {
    if (runs.size() < 3) continue;
    std::vector<double> x, y;
    for (const RunSummary* r : runs) {
      x.push_back(static_cast<double>(r->config.T * r->config.M * r->config.local_steps()));
      y.push_back(r->mean_grad_norm_sq);
    }
    try {
      summary.slopes.push_back({std::get<0>(key), std::get<1>(key), std::get<3>(key), std::get<2>(key),
                                convergence_slope(x, y)});
    } catch (const DomainError&) {
      // Too narrow a T range for a fit; the runs are still reported.
    }
  }
  write_json(join(out_dir, "summary.json"), summary.to_json());
  return summary;
}

RunSummary run_single(const engine::RunConfig& config, const std::string& out_dir) {
  config.validate();
  ensure_dir(out_dir);
  RunSummary r = execute(0, config, join(out_dir, "metrics.csv"), std::nullopt);
  json j = run_json(r);
  json warnings = json::array();
  for (const auto& w : engine::feasibility_warnings(config)) warnings.push_back(w);
  j["feasibility_warnings"] = warnings;
  j["schema_version"] = kCsvSchemaVersion;
  write_json(join(out_dir, "summary.json"), j);
  return r;
}

SviRunOutput run_svi(const SviSpec& spec, const std::string& out_dir) {
  spec.validate();
  ensure_dir(out_dir);
  lda::Corpus corpus;
  std::optional<lda::SyntheticCorpus> synthetic;
  if (spec.docword.empty()) {
    const auto& c = spec.synthetic;
    synthetic = lda::generate_lda_corpus(c.K, c.V, c.docs, c.doc_length, c.doc_alpha, c.topic_concentration, c.seed);
    corpus = synthetic->corpus;
  } else {
    corpus = lda::load_uci_bow(spec.docword, spec.vocab);
  }
  auto [train, heldout] = lda::split_heldout(corpus, spec.heldout_every);
  const lda::LdaOracle oracle(std::make_shared<const lda::Corpus>(std::move(train)), spec.lda);

  const engine::RunConfig& run = spec.run;
  auto result = [&] {
    if (!spec.serial) return lda::run_dpsvi(run, oracle, heldout, spec.eval_every);
    const double eta = run.effective_eta();
    const std::uint64_t per_update = run.M * run.local_steps();
    return lda::run_serial_svi(oracle, heldout, run.T * per_update, run.batch_size,
                               [eta](std::uint64_t) { return eta; }, run.seed, spec.eval_every * per_update);
  };
  SviRunOutput out{result(), -1.0};
  if (synthetic && synthetic->K == spec.lda.K) {
    out.topic_recovery = lda::topic_recovery(out.result.model.lambda(), synthetic->topics, synthetic->K,
                                             synthetic->corpus.vocab_size);
  }
  write_csv(join(out_dir, "svi.csv"), to_table(out.result.points));
  json j = {{"schema_version", kCsvSchemaVersion},
            {"spec", to_json(spec)},
            {"stats", stats_json(out.result.stats)},
            {"nonpositive_entries", out.result.nonpositive_entries},
            {"final_perplexity", out.result.points.empty() ? 0.0 : out.result.points.back().heldout_perplexity}};
  j["topic_recovery"] = out.topic_recovery >= 0.0 ? json(out.topic_recovery) : json(nullptr);
  write_json(join(out_dir, "summary.json"), j);
  return out;
}

rl::RlResult run_rl(const RlSpec& spec, const std::string& out_dir) {
  spec.validate();
  ensure_dir(out_dir);
  rl::RlResult r = rl::run_hsa2c(spec.run, spec.rl);
  write_csv(join(out_dir, "rl.csv"), to_table(r.points));
  json j = {{"schema_version", kCsvSchemaVersion},
            {"spec", to_json(spec)},
            {"stats", stats_json(r.stats)},
            {"env_steps", r.env_steps},
            {"episodes", r.episodes},
            {"optimal_return", rl::optimal_return(spec.rl.env)},
            {"final_mean_return_last_100", r.points.empty() ? 0.0 : r.points.back().mean_return_last_100}};
  write_json(join(out_dir, "summary.json"), j);
  return r;
}

}  // namespace dpsgd::bench
