#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "doctest.h"

#include "dpsgd/bench/analysis.hpp"
#include "dpsgd/bench/config_io.hpp"
#include "dpsgd/bench/experiment.hpp"
#include "dpsgd/bench/metrics.hpp"
#include "dpsgd/engine/schedules.hpp"
#include "dpsgd/error.hpp"

using namespace dpsgd;
using namespace dpsgd::bench;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("dpsgd_bench_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

engine::RunConfig small_run() {
  engine::RunConfig c;
  c.problem = {.name = "sigmoid", .n = 100, .dim = 5, .data_seed = 2, .scale = 2.0};
  c.T = 20;
  c.eta = 0.1;
  c.rho_schedule.rho = 0.5;
  c.metrics_every = 5;
  return c;
}

}  // namespace

TEST_CASE("time speed-up") {
  CHECK(tsp(10.0, 5.0) == 2.0);
  CHECK(tsp(3.0, 3.0) == 1.0);
  CHECK(tsp(1.0, 4.0) == 0.25);
  // Speed-ups compose through an intermediate configuration.
  CHECK(tsp(12.0, 3.0) == doctest::Approx(tsp(12.0, 6.0) * tsp(6.0, 3.0)).epsilon(1e-15));
  CHECK_THROWS_AS(tsp(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(tsp(1.0, -1.0), DomainError);
  CHECK_THROWS_AS(tsp(INFINITY, 1.0), DomainError);
}

TEST_CASE("log-log convergence slope") {
  const std::vector<double> x{1e2, 1e3, 1e4, 1e5};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 / std::sqrt(v));
  const SlopeFit f = convergence_slope(x, y);
  CHECK(f.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<double> flat{2.0, 2.0, 2.0};
  const std::vector<double> x3{1, 10, 100};
  const SlopeFit c = convergence_slope(x3, flat);
  CHECK(c.slope == doctest::Approx(0.0));
  CHECK(c.r2 == 1.0);

  const std::vector<double> noisy{1.0, 0.5, 0.2, 0.12};
  const SlopeFit n = convergence_slope(x, noisy);
  CHECK(n.r2 < 1.0);
  CHECK(n.r2 > 0.9);

  CHECK_THROWS_AS(convergence_slope(std::vector<double>{1, 100}, std::vector<double>{1, 1}), DomainError);
  CHECK_THROWS_AS(convergence_slope(std::vector<double>{1, 5, 50}, flat), DomainError);  // < 2 decades
  CHECK_THROWS_AS(convergence_slope(x3, std::vector<double>{1, 0, 1}), DomainError);
  CHECK_THROWS_AS(convergence_slope(x3, std::vector<double>{1, 1}), DomainError);
}

TEST_CASE("CSV round trip and schema checks") {
  TempDir dir("csv");
  Table t{"dpsgd", {"a", "b"}, {{0.1, 1e-300}, {1.0 / 3.0, -2.5}}};
  write_csv(dir.file("t.csv"), t);
  std::ifstream in(dir.file("t.csv"));
  std::string first;
  std::getline(in, first);
  CHECK(first == "# dpsgd-metrics v1 dpsgd");
  const Table back = read_csv(dir.file("t.csv"));
  CHECK(back.kind == "dpsgd");
  CHECK(back.columns == t.columns);
  CHECK(back.rows == t.rows);
  CHECK(back.column("b") == std::vector<double>{1e-300, -2.5});
  CHECK_THROWS_AS(back.column("zzz"), ConfigError);

  auto write = [&](const std::string& text) {
    std::ofstream(dir.file("bad.csv")) << text;
    return dir.file("bad.csv");
  };
  CHECK_THROWS_AS(read_csv(write("a,b\n1,2\n")), ParseError);
  CHECK_THROWS_AS(read_csv(write("# dpsgd-metrics v2 dpsgd\na,b\n1,2\n")), ParseError);
  CHECK_THROWS_AS(read_csv(write("# dpsgd-metrics v1 dpsgd\na,b\n1\n")), ParseError);
  CHECK_THROWS_AS(read_csv(write("# dpsgd-metrics v1 dpsgd\na,b\n1,x\n")), ParseError);
  CHECK_THROWS_AS(read_csv(dir.file("missing.csv")), ParseError);
}

TEST_CASE("metric table columns") {
  CHECK(to_table(std::vector<MetricsRow>{}).columns ==
        std::vector<std::string>{"wall_clock_s", "t", "grad_norm_sq", "loss", "messages_sent", "effective_gradients"});
  CHECK(to_table(std::vector<lda::SviPoint>{}).columns ==
        std::vector<std::string>{"wall_clock_s", "effective_docs_seen", "heldout_perplexity", "t"});
  CHECK(to_table(std::vector<rl::RlPoint>{}).columns ==
        std::vector<std::string>{"wall_clock_s", "env_steps", "mean_return_last_100_episodes", "episodes", "t"});
}

TEST_CASE("collect_run samples the start, every period and the end") {
  engine::RunConfig c = small_run();
  c.T = 23;
  const auto oracle = problems::make_oracle(c.problem);
  const RunMetrics m = collect_run(c, *oracle);
  std::vector<std::uint64_t> ts;
  for (const auto& r : m.rows) ts.push_back(r.t);
  CHECK(ts == std::vector<std::uint64_t>{0, 5, 10, 15, 20, 23});
  CHECK(m.rows.front().grad_norm_sq ==
        doctest::Approx([&] {
          const auto g = problems::full_grad(*oracle, ParamVector(oracle->initial_point(c.seed)));
          double s = 0.0;
          for (double x : g) s += x * x;
          return s;
        }()).epsilon(1e-14));
  CHECK(m.rows.back().messages_sent == 23);
  CHECK(m.rows.back().loss == doctest::Approx(problems::loss_at(*oracle, ParamVector(m.final_v))).epsilon(1e-14));
  double mean = 0.0;
  for (const auto& r : m.rows) mean += r.grad_norm_sq;
  CHECK(m.mean_grad_norm_sq() == doctest::Approx(mean / 6.0).epsilon(1e-14));
}

TEST_CASE("run config JSON round trip and strictness") {
  engine::RunConfig c = small_run();
  c.nW = 3;
  c.delay.kind = engine::DelayKind::kUniform;
  c.delay.hi_us = 10;
  c.delay.max_staleness = 4;
  c.delay.enforce = true;
  c.delay.policy = engine::StalenessPolicy::kBlockWorker;
  c.rho_schedule.kind = engine::RhoKind::kRobbinsMonro;
  c.cost_mode = engine::CostMode::kSleep;
  c.sim_grad_cost_us = 12.5;
  const json j = to_json(c);
  const engine::RunConfig back = run_config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(*back.delay.max_staleness == 4);
  CHECK(back.delay.policy == engine::StalenessPolicy::kBlockWorker);

  // Partial configs take defaults.
  const engine::RunConfig partial = run_config_from_json(json::parse(R"({"T": 7, "problem": {"name": "quadratic"}})"));
  CHECK(partial.T == 7);
  CHECK(partial.M == 1);

  auto rejects = [](const char* text) {
    try {
      run_config_from_json(json::parse(text));
    } catch (const ConfigError&) {
      return true;
    }
    return false;
  };
  CHECK(rejects(R"({"Tee": 7})"));
  CHECK(rejects(R"({"T": "7"})"));
  CHECK(rejects(R"({"T": -1})"));
  CHECK(rejects(R"({"T": 0})"));
  CHECK(rejects(R"({"T": 1.5})"));
  CHECK(rejects(R"({"eta": "fast"})"));
  CHECK(rejects(R"({"delay": {"kind": "sometimes"}})"));
  CHECK(rejects(R"({"delay": {"bogus": 1}})"));
  CHECK(rejects(R"({"rho_schedule": {"kind": "constant", "rho": 0}})"));
  CHECK(rejects(R"({"problem": {"name": "nope"}, "transport": "carrier-pigeon"})"));
  CHECK(rejects(R"([1, 2])"));
}

TEST_CASE("sweep, SVI and RL spec JSON") {
  ExperimentSpec s;
  s.base = small_run();
  s.B = {1, 10};
  s.T = {100, 1000};
  s.target_loss = 0.4;
  const ExperimentSpec back = experiment_from_json(to_json(s));
  CHECK(to_json(back) == to_json(s));
  CHECK_THROWS_AS(experiment_from_json(json::parse(R"({"sweep": {"B": [0]}})")), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(json::parse(R"({"reference": 3})")), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(json::parse(R"({"sweeps": {}})")), ConfigError);

  SviSpec v;
  v.lda.K = 4;
  v.serial = true;
  CHECK(to_json(svi_from_json(to_json(v))) == to_json(v));
  CHECK_THROWS_AS(svi_from_json(json::parse(R"({"corpus": {"synthetic": {"K": "five"}}})")), ConfigError);

  RlSpec r;
  r.rl.t_max = 9;
  CHECK(to_json(rl_from_json(to_json(r))) == to_json(r));
  CHECK_THROWS_AS(rl_from_json(json::parse(R"({"rl": {"t_max": 0}})")), ConfigError);

  TempDir dir("json");
  std::ofstream(dir.file("bad.json")) << "{ not json";
  CHECK_THROWS_AS(load_json(dir.file("bad.json")), ConfigError);
  CHECK_THROWS_AS(load_json(dir.file("absent.json")), ConfigError);
}

TEST_CASE("sweep expansion and rate rescaling") {
  ExperimentSpec s;
  s.base = small_run();
  s.base.p = 1;
  s.base.B = 1;
  s.p = {1, 2};
  s.B = {1, 10};
  const auto runs = expand_sweep(s);
  REQUIRE(runs.size() == 4);
  CHECK(runs[3].p == 2);
  CHECK(runs[3].B == 10);
  for (const auto& c : runs) {
    CHECK(c.rho_schedule.kind == engine::RhoKind::kRescaled);
    CHECK(c.rho_at(0) == engine::rho_rescale(0.5, 1, 1, 1, c.p, c.B, c.M));
  }
  CHECK(runs[0].rho_at(0) == 0.5);
  s.rescale_rho = false;
  for (const auto& c : expand_sweep(s)) CHECK(c.rho_at(0) == 0.5);
}

TEST_CASE("single-point sweep has TSP 1") {
  TempDir dir("one");
  ExperimentSpec s;
  s.base = small_run();
  const ExperimentSummary sum = run_experiment(s, dir.path.string());
  REQUIRE(sum.runs.size() == 1);
  CHECK(sum.runs[0].ok);
  REQUIRE(sum.runs[0].tsp.has_value());
  CHECK(*sum.runs[0].tsp == 1.0);
  CHECK(fs::exists(dir.file("summary.json")));
  CHECK(fs::exists(dir.file("run_0.csv")));
}

TEST_CASE("B sweep keeps messages fixed and scales gradients") {
  TempDir dir("bsweep");
  ExperimentSpec s;
  s.base = small_run();
  s.B = {1, 10};
  const ExperimentSummary sum = run_experiment(s, dir.path.string());
  REQUIRE(sum.runs.size() == 2);
  CHECK(sum.runs[0].messages == sum.runs[1].messages);
  CHECK(sum.runs[1].effective_gradients == 10 * sum.runs[0].effective_gradients);
  CHECK(sum.runs[1].rho == doctest::Approx(0.5 / std::pow(10.0, 0.25)).epsilon(1e-15));
}

TEST_CASE("summary.json is recomputable from the CSVs") {
  TempDir dir("recompute");
  ExperimentSpec s;
  s.base = small_run();
  s.T = {10, 100, 1000};
  s.target_loss = 0.45;
  const ExperimentSummary sum = run_experiment(s, dir.path.string());
  std::ifstream in(dir.file("summary.json"));
  const json j = json::parse(in);
  REQUIRE(j["runs"].size() == 3);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < 3; ++i) {
    const json& r = j["runs"][i];
    const Table t = read_csv(r["csv"].get<std::string>());
    const auto loss = t.column("loss");
    const auto g = t.column("grad_norm_sq");
    CHECK(r["final_loss"].get<double>() == loss.back());
    CHECK(r["messages"].get<double>() == t.column("messages_sent").back());
    CHECK(r["effective_gradients"].get<double>() == t.column("effective_gradients").back());
    double mean = 0.0;
    for (double v : g) mean += v;
    mean /= static_cast<double>(g.size());
    CHECK(r["mean_grad_norm_sq"].get<double>() == doctest::Approx(mean).epsilon(1e-14));
    const auto ttt = time_to_target(t, "loss", 0.45);
    if (ttt) {
      CHECK(r["time_to_target"].get<double>() == *ttt);
    } else {
      CHECK(r["time_to_target"].is_null());
    }
    x.push_back(static_cast<double>(r["config"]["T"].get<std::uint64_t>()));
    y.push_back(mean);
  }
  REQUIRE(j["slopes"].size() == 1);
  const SlopeFit fit = convergence_slope(x, y);
  CHECK(j["slopes"][0]["slope"].get<double>() == doctest::Approx(fit.slope).epsilon(1e-12));
  CHECK(j["slopes"][0]["r2"].get<double>() == doctest::Approx(fit.r2).epsilon(1e-12));
  CHECK(sum.slopes.size() == 1);
}

TEST_CASE("a failing run is recorded and the sweep continues") {
  TempDir dir("fail");
  ExperimentSpec s;
  s.base = small_run();
  s.B = {1, 2};
  s.base.problem.name = "matrix_factorization";  // dim 5 cannot be factorized
  ExperimentSummary sum = run_experiment(s, dir.path.string());
  REQUIRE(sum.runs.size() == 2);
  CHECK_FALSE(sum.runs[0].ok);
  CHECK_FALSE(sum.runs[1].ok);
  CHECK(sum.runs[0].error.find("matrix_factorization") != std::string::npos);
  CHECK(fs::exists(dir.file("summary.json")));

  s.base = small_run();
  s.nW = {1, 2};
  s.base.trace_overwrites = true;
  s.base.p = 2;
  sum = run_experiment(s, dir.path.string());
  REQUIRE(sum.runs.size() == 4);  // nW {1, 2} x B {1, 2}
  for (const auto& r : sum.runs) CHECK(r.ok);
}

TEST_CASE("time to target") {
  const Table t{"dpsgd", {"wall_clock_s", "loss"}, {{0.0, 1.0}, {0.5, 0.6}, {1.5, 0.3}, {2.0, 0.2}}};
  CHECK(time_to_target(t, "loss", 0.6) == 0.5);
  CHECK(time_to_target(t, "loss", 0.25) == 2.0);
  CHECK_FALSE(time_to_target(t, "loss", 0.1).has_value());
  CHECK_THROWS_AS(time_to_target(t, "nope", 0.1), ConfigError);
}

TEST_CASE("SVI and RL runs write their outputs") {
  TempDir dir("svi_rl");
  SviSpec v;
  v.synthetic = {.K = 3, .V = 30, .docs = 60, .doc_length = 30};
  v.lda.K = 3;
  v.run.T = 10;
  v.run.batch_size = 3;
  v.run.eta = 1.0;
  v.run.rho_schedule.rho = 0.5;
  v.eval_every = 5;
  const SviRunOutput out = run_svi(v, (dir.path / "svi").string());
  CHECK(out.topic_recovery > 0.0);
  const Table st = read_csv((dir.path / "svi" / "svi.csv").string());
  CHECK(st.rows.size() == 2);
  CHECK(st.column("t") == std::vector<double>{5, 10});

  RlSpec r;
  r.run.T = 20;
  r.rl.env = rl::GridWorld::square(3);
  const rl::RlResult res = run_rl(r, (dir.path / "rl").string());
  CHECK(res.stats.iterations == 20);
  CHECK(read_csv((dir.path / "rl" / "rl.csv").string()).rows.size() == 20);
}
