// Acceptance checks. Prints one PASS/FAIL line per criterion with the
// measured values and exits non-zero if any criterion fails.

#include <boost/math/special_functions/digamma.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dpsgd/bench/analysis.hpp"
#include "dpsgd/bench/metrics.hpp"
#include "dpsgd/engine/runtime.hpp"
#include "dpsgd/engine/schedules.hpp"
#include "dpsgd/engine/wire.hpp"
#include "dpsgd/lda/corpus.hpp"
#include "dpsgd/lda/digamma.hpp"
#include "dpsgd/lda/model.hpp"
#include "dpsgd/lda/svi.hpp"
#include "dpsgd/problems/builtin.hpp"
#include "dpsgd/rl/actor_critic.hpp"
#include "dpsgd/rl/gridworld.hpp"
#include "dpsgd/rl/hsa2c.hpp"
#include "support/digamma_oracle.hpp"
#include "support/reference.hpp"

using namespace dpsgd;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  const bool in_time = secs <= budget_s;
  const bool pass = out.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s criterion %2d (%s): %s; runtime %.3f s (budget %g s%s)\n", pass ? "PASS" : "FAIL", id, title,
              out.detail.c_str(), secs, budget_s, in_time ? "" : ", exceeded");
  std::fflush(stdout);
}

template <class... Args>
std::string fmt(const char* pattern, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

// ---------------------------------------------------------------------------

Outcome serial_equivalence() {
  engine::RunConfig c;
  c.problem = {.name = "quadratic", .n = 500, .dim = 10, .data_seed = 4};
  c.T = 1000;
  c.eta = 0.05;
  c.rho_schedule.rho = 0.8;
  c.seed = 2024;
  const auto oracle = problems::make_oracle(c.problem);
  const auto r = engine::run_dpsgd(c, *oracle);
  const auto ref = testref::serial_sgd(*oracle, oracle->initial_point(c.seed), c.T, c.eta, 0.8, c.seed);
  const double d = max_abs_diff(r.v.values(), ref);
  return {d <= 1e-12, fmt("max |v - v_serial| = %.3g over %llu iterations (tol 1e-12)", d,
                          static_cast<unsigned long long>(r.stats.iterations))};
}

Outcome async_distributed_case() {
  engine::RunConfig c;
  c.problem = {.name = "quadratic", .n = 500, .dim = 10, .data_seed = 4};
  c.T = 2000;
  c.nW = 4;
  c.M = 2;
  c.eta = 0.05;
  c.rho_schedule.rho = 0.5;
  c.seed = 9;
  c.delay.kind = engine::DelayKind::kUniform;
  c.delay.lo_us = 0;
  c.delay.hi_us = 8;
  const auto oracle = problems::make_oracle(c.problem);
  testref::Schedule schedule;
  const auto r = engine::run_dpsgd(c, *oracle, testref::record_schedule(schedule));
  const auto ref = testref::async_sgd(*oracle, oracle->initial_point(c.seed), schedule, c.eta, 0.5, c.seed);
  const double d = max_abs_diff(r.v.values(), ref);
  return {d <= 1e-12 && r.stats.max_applied_staleness > 0,
          fmt("max |v - v_async_ref| = %.3g (tol 1e-12), max staleness %llu", d,
              static_cast<unsigned long long>(r.stats.max_applied_staleness))};
}

Outcome lock_free_case() {
  engine::RunConfig c;
  c.problem = {.name = "quadratic", .n = 500, .dim = 10, .data_seed = 4};
  c.T = 1;
  c.p = 4;
  c.B = 2500;
  c.eta = 0.002;
  c.rho_schedule.rho = 1.0;
  c.seed = 17;
  c.trace_overwrites = true;
  const auto oracle = problems::make_oracle(c.problem);
  testref::ReplayCheck check;
  bool delta_exact = true;
  std::vector<double> base, delta;
  engine::WorkerOptions opts;
  opts.on_pass = [&](const engine::PassRecord& rec) {
    std::vector<std::size_t> drawn;
    for (std::uint32_t t = 0; t < c.p; ++t) {
      Stream rng = engine::sample_stream(c.seed, rec.worker, t, rec.pass);
      for (std::uint64_t b = 0; b < c.B; ++b) drawn.push_back(rng.below(oracle->samples()));
    }
    check = testref::replay(*rec.trace, {}, oracle.get(), std::move(drawn));
    base.assign(rec.base.v->values().begin(), rec.base.v->values().end());
    delta = rec.update.delta;
    for (std::size_t k = 0; k < delta.size(); ++k) delta_exact = delta_exact && check.replayed[k] - base[k] == delta[k];
  };
  const auto r = engine::run_dpsgd(c, *oracle, {}, opts);
  bool final_exact = true;
  for (std::size_t k = 0; k < base.size(); ++k) final_exact = final_exact && r.v[k] == base[k] + delta[k];
  const bool ok = check.steps == 10000 && delta_exact && final_exact && check.reads_in_history && check.grads_match;
  return {ok, fmt("%zu traced steps, lost per-dimension writes %zu; replay exact %s, reads in history %s, "
                  "gradients match drawn samples %s, global update exact %s",
                  check.steps, check.lost_writes, delta_exact ? "yes" : "no", check.reads_in_history ? "yes" : "no",
                  check.grads_match ? "yes" : "no", final_exact ? "yes" : "no")};
}

Outcome communication_law() {
  engine::RunConfig c;
  c.problem = {.name = "sigmoid", .n = 1000, .dim = 20, .data_seed = 1};
  c.T = 200;
  c.M = 2;
  c.nW = 3;
  c.p = 2;
  c.seed = 5;
  const auto oracle = problems::make_oracle(c.problem);
  c.B = 1;
  const auto one = engine::run_dpsgd(c, *oracle).stats;
  c.B = 10;
  const auto ten = engine::run_dpsgd(c, *oracle).stats;
  const bool ok = one.pushes_received == ten.pushes_received && one.pushes_received == c.T * c.M &&
                  ten.effective_gradients == 10 * one.effective_gradients;
  return {ok, fmt("messages %llu (B=1) vs %llu (B=10); effective gradients %llu vs %llu",
                  static_cast<unsigned long long>(one.pushes_received),
                  static_cast<unsigned long long>(ten.pushes_received),
                  static_cast<unsigned long long>(one.effective_gradients),
                  static_cast<unsigned long long>(ten.effective_gradients))};
}

Outcome learning_rate_law() {
  const double a = engine::rho_rescale(0.1, 1, 1, 1, 16, 1, 1);
  const double b = engine::rho_rescale(0.1, 1, 1, 1, 2, 4, 2);
  return {a == 0.05 && b == 0.05, fmt("rho' = %.17g (p'=16), %.17g (p'B'M' = 2*4*2); expected 0.05 exactly", a, b)};
}

Outcome convergence_slope() {
  std::vector<double> x, y;
  std::string values;
  for (std::uint64_t T : {1000ULL, 10000ULL, 100000ULL}) {
    engine::RunConfig c;
    c.problem = {.name = "sigmoid", .n = 1000, .dim = 20, .data_seed = 1, .noise = 0.1, .scale = 3.0, .l2 = 0.0};
    c.T = T;
    c.nW = 2;
    c.p = 2;
    c.B = 5;
    c.M = 2;
    c.seed = 1;
    c.rho_schedule.kind = engine::RhoKind::kCorollary1;
    c.theory.f0_minus_fstar = 0.5;
    c.theory.A = 1.0;
    c.theory.alpha = 1.0;
    c.metrics_every = 10;
    const auto oracle = problems::make_oracle(c.problem);
    const bench::RunMetrics m = bench::collect_run(c, *oracle);
    x.push_back(static_cast<double>(T));
    y.push_back(m.mean_grad_norm_sq());
    values += fmt("%s%g", values.empty() ? "" : ", ", y.back());
  }
  const bench::SlopeFit fit = bench::convergence_slope(x, y);
  const bool ok = fit.slope >= -0.7 && fit.slope <= -0.3 && fit.r2 >= 0.9;
  return {ok, fmt("mean |grad f|^2 = {%s}; slope %.4f (want [-0.7, -0.3]), R^2 %.4f (want >= 0.9)", values.c_str(),
                  fit.slope, fit.r2)};
}

double throughput(std::uint32_t nW, std::uint32_t p, engine::CostMode mode, std::uint64_t T) {
  engine::RunConfig c;
  c.problem = {.name = "sigmoid", .n = 1000, .dim = 20, .data_seed = 1};
  c.T = T;
  c.nW = nW;
  c.p = p;
  c.B = 10;
  c.M = 1;
  c.seed = 3;
  c.sim_grad_cost_us = 1000.0;
  c.cost_mode = mode;
  c.ordering = engine::Ordering::kArrival;
  c.delay.kind = engine::DelayKind::kFixed;
  c.delay.latency_us = 10.0;
  const auto oracle = problems::make_oracle(c.problem);
  const auto r = engine::run_dpsgd(c, *oracle);
  return static_cast<double>(r.stats.effective_gradients) / r.stats.wall_clock_s;
}

Outcome throughput_scaling() {
  const unsigned cores = std::thread::hardware_concurrency();
  const double w1 = throughput(1, 1, engine::CostMode::kSleep, 100);
  const double w2 = throughput(2, 1, engine::CostMode::kSleep, 200) / w1;
  const double w4 = throughput(4, 1, engine::CostMode::kSleep, 400) / w1;
  const double p1 = throughput(1, 1, engine::CostMode::kSleep, 100);
  const double p2 = throughput(1, 2, engine::CostMode::kSleep, 100) / p1;
  const double p4 = throughput(1, 4, engine::CostMode::kSleep, 100) / p1;
  const bool ok = w2 >= 1.8 && w4 >= 3.2 && p2 >= 1.7 && p4 >= 3.0;
  std::string detail = fmt("sleep-mode 1 ms gradients, %u hardware threads; nW {1,2,4} ratios {1, %.2f, %.2f} "
                           "(want >= {1, 1.8, 3.2}); p {1,2,4} ratios {1, %.2f, %.2f} (want >= {1, 1.7, 3.0})",
                           cores, w2, w4, p2, p4);
  if (cores >= 8) {
    const double b1 = throughput(1, 1, engine::CostMode::kBusy, 100);
    const double b2 = throughput(1, 2, engine::CostMode::kBusy, 100) / b1;
    const double b4 = throughput(1, 4, engine::CostMode::kBusy, 100) / b1;
    detail += fmt("; busy-wait p ratios {1, %.2f, %.2f}", b2, b4);
    return {ok && b2 >= 1.7 && b4 >= 3.0, detail};
  }
  detail += fmt("; busy-wait thread scaling not verifiable here (needs >= 8 cores, have %u)", cores);
  return {ok, detail};
}

Outcome staleness_bound() {
  const auto oracle = problems::make_oracle({.name = "sigmoid", .n = 200, .dim = 8, .data_seed = 2});
  std::uint64_t worst_enforced = 0, dropped = 0, violations_loose = 0, runs_with_violation = 0;
  const std::uint64_t bound = 2;
  for (std::uint64_t s = 0; s < 100; ++s) {
    engine::RunConfig c;
    c.problem = {.name = "sigmoid", .n = 200, .dim = 8, .data_seed = 2};
    c.T = 60;
    c.nW = 4;
    c.M = 1;
    c.B = 2;
    c.seed = 1000 + s;
    c.delay.kind = engine::DelayKind::kSeededJitter;
    c.delay.latency_us = 1.0;
    c.delay.jitter_us = 30.0;
    c.delay.max_staleness = bound;
    c.delay.enforce = true;
    const auto on = engine::run_dpsgd(c, *oracle).stats;
    worst_enforced = std::max(worst_enforced, on.max_applied_staleness);
    dropped += on.updates_dropped;
    c.delay.enforce = false;
    c.delay.max_staleness = 0;
    const auto off = engine::run_dpsgd(c, *oracle).stats;
    violations_loose += off.staleness_violations;
    runs_with_violation += off.staleness_violations > 0;
  }
  const bool ok = worst_enforced <= bound && violations_loose > 0;
  return {ok, fmt("100 seeds; enforced D'=%llu: max applied staleness %llu, %llu stale updates dropped; "
                  "unenforced D'=0: %llu violations in %llu runs",
                  static_cast<unsigned long long>(bound), static_cast<unsigned long long>(worst_enforced),
                  static_cast<unsigned long long>(dropped), static_cast<unsigned long long>(violations_loose),
                  static_cast<unsigned long long>(runs_with_violation))};
}

struct SviComparison {
  double dist_ppl, serial_ppl, dist_rec, serial_rec;
  std::uint64_t dist_docs, serial_docs;
};

SviComparison compare_svi(std::uint64_t corpus_seed) {
  const lda::SyntheticCorpus syn = lda::generate_lda_corpus(5, 100, 500, 100, 0.2, 0.2, corpus_seed);
  const auto [train, heldout] = lda::split_heldout(syn.corpus, 10);
  const lda::LdaOracle oracle(std::make_shared<const lda::Corpus>(train),
                              lda::LdaParams{.K = 5, .zeta = 0.01, .alpha_doc = 0.2});
  engine::RunConfig c;
  c.nW = 2;
  c.p = 2;
  c.B = 5;
  c.M = 2;
  c.T = 100;
  c.batch_size = 10;
  c.eta = 0.05;
  c.rho_schedule.rho = 0.5;
  c.seed = corpus_seed;
  const lda::SviResult dist = lda::run_dpsvi(c, oracle, heldout);
  const std::uint64_t batches = c.T * c.M * c.local_steps();
  const lda::SviResult serial =
      lda::run_serial_svi(oracle, heldout, batches, c.batch_size, [](std::uint64_t) { return 0.05; }, c.seed);
  return {dist.points.back().heldout_perplexity,
          serial.points.back().heldout_perplexity,
          lda::topic_recovery(dist.model.lambda(), syn.topics, 5, 100),
          lda::topic_recovery(serial.model.lambda(), syn.topics, 5, 100),
          dist.points.back().effective_docs_seen,
          serial.points.back().effective_docs_seen};
}

Outcome dpsvi_fidelity() {
  const SviComparison r = compare_svi(1);
  const double gap = std::abs(r.dist_ppl - r.serial_ppl) / r.serial_ppl;
  const bool ok = r.dist_docs == r.serial_docs && gap <= 0.05 && r.dist_rec >= 0.9;
  return {ok, fmt("corpus seed 1, %llu docs seen each; perplexity DPSVI %.4f vs serial %.4f (gap %.4f, want <= 0.05); "
                  "topic recovery DPSVI %.4f (want >= 0.9), serial %.4f",
                  static_cast<unsigned long long>(r.dist_docs), r.dist_ppl, r.serial_ppl, gap, r.dist_rec,
                  r.serial_rec)};
}

void dpsvi_seed_survey() {
  int gap_ok = 0, dist_rec_ok = 0, serial_rec_ok = 0;
  std::string recs;
  for (std::uint64_t s = 1; s <= 6; ++s) {
    const SviComparison r = compare_svi(s);
    gap_ok += std::abs(r.dist_ppl - r.serial_ppl) / r.serial_ppl <= 0.05;
    dist_rec_ok += r.dist_rec >= 0.9;
    serial_rec_ok += r.serial_rec >= 0.9;
    recs += fmt("%s%.3f/%.3f", recs.empty() ? "" : ", ", r.dist_rec, r.serial_rec);
  }
  std::printf("INFO criterion  8 seed survey (corpus seeds 1..6): perplexity gap <= 5%% in %d/6; recovery >= 0.9 "
              "for DPSVI in %d/6, serial SVI in %d/6; recovery DPSVI/serial per seed {%s}\n",
              gap_ok, dist_rec_ok, serial_rec_ok, recs.c_str());
  std::fflush(stdout);
}

Outcome digamma_accuracy() {
  double worst = 0.0, worst_boost = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = 0.01 * std::pow(1e4, i / 999.0);
    const double got = lda::digamma(x);
    worst = std::max(worst, std::abs(got - static_cast<double>(testref::digamma_oracle(x))));
    worst_boost = std::max(worst_boost, std::abs(got - boost::math::digamma(x)));
  }
  const std::vector<double> ones{1.0, 1.0};
  const auto e = lda::dirichlet_expectation(ones);
  const double de = std::max(std::abs(e[0] + 1.0), std::abs(e[1] + 1.0));
  return {worst <= 1e-10 && de <= 1e-12,
          fmt("max |psi - oracle| = %.3g on 1000 log-spaced points of [0.01, 100] (tol 1e-10; vs boost %.3g); "
              "dirichlet_expectation((1,1)) off by %.3g (tol 1e-12)",
              worst, worst_boost, de)};
}

Outcome perplexity_sanity() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const std::size_t V = 20 + 37 * seed;
    const lda::SyntheticCorpus syn = lda::generate_lda_corpus(3 + seed, V, 40, 30 + 10 * seed, 0.3, 0.3, seed);
    const lda::LdaModel uniform = lda::LdaModel::uniform(3 + seed, V, 0.01, 0.3, 40);
    worst = std::max(worst, std::abs(lda::perplexity(uniform, syn.corpus) - static_cast<double>(V)));
  }
  return {worst <= 1e-9, fmt("max |perplexity - V| = %.3g over 5 corpora (tol 1e-9)", worst)};
}

Outcome hsa2c_toy() {
  const rl::GridWorld env = rl::GridWorld::square(5);
  const double optimal = rl::optimal_return(env);
  const double target = 0.95 * optimal;
  int reached = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    engine::RunConfig c;
    c.nW = 2;
    c.p = 2;
    c.B = 4;
    c.M = 2;
    c.eta = 0.1;
    c.rho_schedule.rho = 0.5;
    c.T = 1ULL << 40;
    c.seed = seed;
    rl::RlParams params;
    params.env = env;
    params.minibatch = 2;
    params.t_max = 5;
    params.max_env_steps = 200000;
    const rl::RlResult r = rl::run_hsa2c(c, params);
    std::uint64_t at = 0;
    for (const auto& pt : r.points) {
      if (pt.episodes >= 100 && pt.mean_return_last_100 >= target && pt.env_steps <= 200000) {
        at = pt.env_steps;
        break;
      }
    }
    reached += at > 0;
    per_seed += fmt("%s%s", per_seed.empty() ? "" : ", ",
                    at ? fmt("%llu", static_cast<unsigned long long>(at)).c_str() : "never");
  }

  // Finite-difference check of the actor and critic gradients.
  const rl::AcLayout layout{env.states()};
  Stream rng{77};
  double worst = 0.0;
  for (int d = 0; d < 20; ++d) {
    std::vector<double> params(layout.dim());
    for (double& x : params) x = 0.5 * rng.normal();
    rl::Episode ep{env.start, 0, 0.0};
    const rl::Trajectory t = rl::rollout(env, layout, params, 5, rng, ep);
    const auto R = rl::kstep_returns(t, env.gamma);
    std::vector<double> adv(R.size());
    for (std::size_t i = 0; i < R.size(); ++i) adv[i] = R[i] - rl::state_value(layout, params, t.steps[i].state);
    std::vector<double> g(layout.dim());
    rl::ac_gradients(layout, t, R, params, g);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double x0 = params[k], h = 1e-5;
      params[k] = x0 + h;
      const double up = rl::surrogate_loss(layout, t, R, adv, params);
      params[k] = x0 - h;
      const double down = rl::surrogate_loss(layout, t, R, adv, params);
      params[k] = x0;
      const double fd = (up - down) / (2 * h);
      num += (fd - g[k]) * (fd - g[k]);
      den += g[k] * g[k];
    }
    worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(den), 1e-8));
  }
  return {reached >= 4 && worst <= 1e-4,
          fmt("optimal return %.4f, target %.4f; env steps to target per seed {%s}, %d/5 seeds (want >= 4); "
              "gradient finite-difference rel. error %.3g on 20 draws (tol 1e-4)",
              optimal, target, per_seed.c_str(), reached, worst)};
}

Outcome wire_protocol() {
  using Bytes = std::vector<std::uint8_t>;
  auto le = [](Bytes& out, std::uint64_t x, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  };
  Bytes pull{'D', 'P', 'S', 'G', 0, 4, 0, 0, 0};
  le(pull, 7, 4);
  Bytes model{'D', 'P', 'S', 'G', 1, 32, 0, 0, 0};
  le(model, 3, 8);
  le(model, 2, 8);
  le(model, 0x3FF0000000000000, 8);  // 1.0
  le(model, 0xC000000000000000, 8);  // -2.0
  Bytes push{'D', 'P', 'S', 'G', 2, 28, 0, 0, 0};
  le(push, 1, 4);
  le(push, 5, 8);
  le(push, 1, 8);
  le(push, 0x3FE0000000000000, 8);  // 0.5
  const Bytes shutdown{'D', 'P', 'S', 'G', 3, 0, 0, 0, 0};

  const wire::Message msgs[] = {wire::PullReq{7}, wire::Model{3, {1.0, -2.0}},
                                wire::Push{UpdateVector{{0.5}, 5, 1}}, wire::Shutdown{}};
  const Bytes golden[] = {pull, model, push, shutdown};
  int matched = 0;
  for (int i = 0; i < 4; ++i) matched += wire::encode(msgs[i]) == golden[i] && wire::decode(golden[i]) == msgs[i];

  auto rejects = [](const Bytes& b) {
    try {
      wire::decode(b);
    } catch (const wire::WireError&) {
      return true;
    }
    return false;
  };
  Bytes dim0{'D', 'P', 'S', 'G', 1, 16, 0, 0, 0};
  le(dim0, 3, 8);
  le(dim0, 0, 8);
  const Bytes truncated(model.begin(), model.end() - 3);
  const Bytes short_header(model.begin(), model.begin() + 6);
  const bool dim0_rejected = rejects(dim0);
  const bool truncated_rejected = rejects(truncated) && rejects(short_header);
  return {matched == 4 && dim0_rejected && truncated_rejected,
          fmt("%d/4 message types match golden bytes both ways; dim 0 rejected %s; truncated frame rejected %s",
              matched, dim0_rejected ? "yes" : "no", truncated_rejected ? "yes" : "no")};
}

}  // namespace

int main() {
  criterion(1, "serial equivalence", 1, serial_equivalence);
  criterion(2, "async distributed special case", 10, async_distributed_case);
  criterion(2, "lock-free parallel special case", 10, lock_free_case);
  criterion(3, "communication law", 5, communication_law);
  criterion(4, "learning-rate law", 0.001, learning_rate_law);
  criterion(5, "convergence-rate scaling", 600, convergence_slope);
  criterion(6, "throughput scaling", 600, throughput_scaling);
  criterion(7, "staleness bound", 120, staleness_bound);
  criterion(8, "DPSVI fidelity", 300, dpsvi_fidelity);
  dpsvi_seed_survey();
  criterion(9, "digamma accuracy", 1, digamma_accuracy);
  criterion(10, "perplexity sanity", 1, perplexity_sanity);
  criterion(11, "HSA2C toy", 600, hsa2c_toy);
  criterion(12, "wire protocol", 1, wire_protocol);
  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
