// dpsgd: command-line front end for single runs, sweeps, LDA and RL runs.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "dpsgd/bench/config_io.hpp"
#include "dpsgd/bench/experiment.hpp"
#include "dpsgd/engine/runtime.hpp"
#include "dpsgd/engine/schedules.hpp"
#include "dpsgd/error.hpp"

namespace {

using namespace dpsgd;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::optional<std::string> transport;
  std::optional<std::string> listen;
  std::optional<std::string> master_addr;
  std::uint32_t worker_id = 0;
  bool trace_overwrites = false;
  std::string kind = "run";
};

void apply_overrides(const Options& o, engine::RunConfig& c) {
  if (o.seed) c.seed = *o.seed;
  if (o.transport) {
    if (*o.transport == "inproc") {
      c.transport = engine::TransportKind::kInProc;
    } else if (*o.transport == "tcp") {
      c.transport = engine::TransportKind::kTcp;
    } else {
      throw ConfigError("--transport must be inproc or tcp");
    }
  }
  if (o.trace_overwrites) c.trace_overwrites = true;
  c.validate();
}

void print_stats(const engine::MasterStats& s) {
  std::printf("iterations %llu  pushes %llu  applied %llu  dropped %llu  effective_gradients %llu  wall %.3fs\n",
              static_cast<unsigned long long>(s.iterations), static_cast<unsigned long long>(s.pushes_received),
              static_cast<unsigned long long>(s.updates_applied), static_cast<unsigned long long>(s.updates_dropped),
              static_cast<unsigned long long>(s.effective_gradients), s.wall_clock_s);
}

int cmd_run(const Options& o) {
  engine::RunConfig c = bench::run_config_from_json(bench::load_json(o.config));
  apply_overrides(o, c);
  for (const auto& w : engine::feasibility_warnings(c)) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (o.listen && o.master_addr) throw ConfigError("--listen and --master-addr are exclusive");
  if (o.listen) {
    const auto oracle = problems::make_oracle(c.problem);
    const auto r = engine::run_tcp_master(c, engine::parse_host_port(*o.listen), ParamVector(oracle->initial_point(c.seed)));
    print_stats(r.stats);
    return 0;
  }
  if (o.master_addr) {
    const auto oracle = problems::make_oracle(c.problem);
    const auto passes = engine::run_tcp_worker(c, *oracle, engine::parse_host_port(*o.master_addr), o.worker_id);
    std::printf("worker %u: %llu passes\n", o.worker_id, static_cast<unsigned long long>(passes));
    return 0;
  }
  const bench::RunSummary r = bench::run_single(c, o.out_dir);
  std::printf("loss %.6g  mean |grad|^2 %.6g  throughput %.6g grad/s\n", r.final_loss, r.mean_grad_norm_sq,
              r.throughput);
  std::printf("wrote %s\n", r.csv.c_str());
  return 0;
}

int cmd_sweep(const Options& o) {
  bench::ExperimentSpec spec = bench::experiment_from_json(bench::load_json(o.config));
  apply_overrides(o, spec.base);
  const auto summary = bench::run_experiment(spec, o.out_dir);
  int failed = 0;
  for (const auto& r : summary.runs) {
    if (r.ok) {
      std::printf("run %zu: nW=%u p=%u B=%llu M=%u T=%llu rho=%.6g wall=%.3fs throughput=%.6g tsp=%s\n", r.index,
                  r.config.nW, r.config.p, static_cast<unsigned long long>(r.config.B), r.config.M,
                  static_cast<unsigned long long>(r.config.T), r.rho, r.wall_clock_s, r.throughput,
                  r.tsp ? std::to_string(*r.tsp).c_str() : "n/a");
    } else {
      ++failed;
      std::printf("run %zu: FAILED: %s\n", r.index, r.error.c_str());
    }
  }
  for (const auto& s : summary.slopes) std::printf("slope %.4f (R^2 %.4f)\n", s.fit.slope, s.fit.r2);
  return failed ? kExitRuntime : 0;
}

int cmd_svi(const Options& o) {
  bench::SviSpec spec = bench::svi_from_json(bench::load_json(o.config));
  apply_overrides(o, spec.run);
  const auto out = bench::run_svi(spec, o.out_dir);
  if (!out.result.points.empty()) {
    std::printf("held-out perplexity %.6g\n", out.result.points.back().heldout_perplexity);
  }
  if (out.topic_recovery >= 0.0) std::printf("topic recovery %.4f\n", out.topic_recovery);
  return 0;
}

int cmd_rl(const Options& o) {
  bench::RlSpec spec = bench::rl_from_json(bench::load_json(o.config));
  apply_overrides(o, spec.run);
  const auto r = bench::run_rl(spec, o.out_dir);
  std::printf("env steps %llu  episodes %llu  mean return (last 100) %.4f  optimal %.4f\n",
              static_cast<unsigned long long>(r.env_steps), static_cast<unsigned long long>(r.episodes),
              r.points.empty() ? 0.0 : r.points.back().mean_return_last_100, rl::optimal_return(spec.rl.env));
  return 0;
}

int cmd_validate(const Options& o) {
  const bench::json j = bench::load_json(o.config);
  if (o.kind == "run") {
    const engine::RunConfig c = bench::run_config_from_json(j);
    for (const auto& w : engine::feasibility_warnings(c)) std::printf("warning: %s\n", w.c_str());
  } else if (o.kind == "sweep") {
    bench::experiment_from_json(j);
  } else if (o.kind == "svi") {
    bench::svi_from_json(j);
  } else if (o.kind == "rl") {
    bench::rl_from_json(j);
  } else {
    throw ConfigError("--kind must be run, sweep, svi or rl");
  }
  std::printf("ok\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed and parallel SGD harness"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON configuration file")->required();
    sub->add_option("--seed", o.seed, "override the run seed");
    sub->add_option("--out-dir", o.out_dir, "directory for CSV and JSON output");
    sub->add_option("--transport", o.transport, "inproc or tcp");
    sub->add_flag("--trace-overwrites", o.trace_overwrites, "record lock-free overwrite traces");
  };
  CLI::App* run = app.add_subcommand("run", "single DPSGD run");
  common(run);
  run->add_option("--listen", o.listen, "serve as TCP master on host:port");
  run->add_option("--master-addr", o.master_addr, "serve as TCP worker of host:port");
  run->add_option("--worker-id", o.worker_id, "worker id for --master-addr");
  CLI::App* sweep = app.add_subcommand("sweep", "run an experiment sweep");
  common(sweep);
  CLI::App* svi = app.add_subcommand("svi", "LDA run (DPSVI or serial SVI)");
  common(svi);
  CLI::App* rl = app.add_subcommand("rl", "HSA2C run on the gridworld");
  common(rl);
  CLI::App* validate = app.add_subcommand("validate-config", "check a configuration file");
  validate->add_option("--config", o.config, "JSON configuration file")->required();
  validate->add_option("--kind", o.kind, "run, sweep, svi or rl");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    if (*svi) return cmd_svi(o);
    if (*rl) return cmd_rl(o);
    return cmd_validate(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
