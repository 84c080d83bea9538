#include "dpsgd/lda/svi.hpp"

#include <chrono>

#include "dpsgd/engine/runtime.hpp"
#include "dpsgd/error.hpp"
#include "dpsgd/rng.hpp"

namespace dpsgd::lda {

namespace {

// Torn reads may expose entries a concurrent step has not finished moving;
// the E-step needs them positive.
constexpr double kLambdaFloor = 1e-12;

}  // namespace

LdaOracle::LdaOracle(std::shared_ptr<const Corpus> train, LdaParams params)
    : train_(std::move(train)), params_(params) {
  if (!train_ || train_->docs.empty()) throw ConfigError("LdaOracle: empty training corpus");
  train_->validate();
  if (params_.K == 0) throw ConfigError("LdaOracle: K must be positive");
  if (!(params_.zeta > 0.0) || !(params_.alpha_doc > 0.0)) throw ConfigError("LdaOracle: priors must be positive");
  if (!(params_.tol > 0.0) || params_.max_iters < 1) throw ConfigError("LdaOracle: bad E-step tolerance");
  for (const auto& d : train_->docs) {
    if (d.empty()) throw ConfigError("LdaOracle: training corpus contains an empty document");
  }
}

void LdaOracle::sample_grad(std::size_t i, std::span<const double> x, std::span<double> out) const {
  const std::size_t idx[1] = {i};
  batch_grad(idx, x, out);
}

double LdaOracle::sample_loss(std::size_t i, std::span<const double> x) const {
  const Doc& doc = train_->docs[i];
  const DocWordWeights weights(x, params_.K, train_->vocab_size, doc, kLambdaFloor);
  const DocState state = local_estep(weights, params_.alpha_doc, doc, params_.tol, params_.max_iters);
  return -doc_elbo(weights, params_.alpha_doc, doc, state);
}

void LdaOracle::batch_grad(std::span<const std::size_t> indices, std::span<const double> x,
                           std::span<double> out) const {
  const std::size_t K = params_.K;
  const std::size_t V = train_->vocab_size;
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i : indices) {
    const Doc& doc = train_->docs[i];
    const DocWordWeights weights(x, K, V, doc, kLambdaFloor);
    const DocState state = local_estep(weights, params_.alpha_doc, doc, params_.tol, params_.max_iters);
    accumulate_sufficient_stats(doc, state, K, V, out);
  }
  const double scale = static_cast<double>(train_->docs.size()) / static_cast<double>(indices.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = x[k] - (params_.zeta + scale * out[k]);
}

std::vector<double> LdaOracle::initial_point(std::uint64_t seed) const {
  const LdaModel m = LdaModel::random_init(params_.K, train_->vocab_size, params_.zeta, params_.alpha_doc,
                                           train_->docs.size(), seed);
  return {m.lambda().begin(), m.lambda().end()};
}

LdaModel LdaOracle::model_at(std::vector<double> lambda) const {
  for (double& x : lambda) x = std::max(x, kLambdaFloor);
  return LdaModel(params_.K, train_->vocab_size, params_.zeta, params_.alpha_doc, train_->docs.size(),
                  std::move(lambda));
}

SviResult run_serial_svi(const LdaOracle& oracle, const Corpus& heldout, std::uint64_t iterations, std::size_t G,
                         const std::function<double(std::uint64_t)>& rate, std::uint64_t seed,
                         std::uint64_t eval_every) {
  if (G == 0) throw ConfigError("serial SVI: batch size must be positive");
  using Clock = std::chrono::steady_clock;
  const std::size_t n = oracle.samples();
  std::vector<double> lambda = oracle.initial_point(seed);
  std::vector<double> g(lambda.size());
  std::vector<std::size_t> batch(G);
  SviResult result{oracle.model_at(lambda), {}, {}, 0};
  double excluded = 0.0;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count() - excluded; };
  auto evaluate = [&](std::uint64_t t) {
    const auto t0 = Clock::now();
    const double wall = elapsed();
    const double ppl = perplexity(oracle.model_at(lambda), heldout, oracle.params().tol, oracle.params().max_iters);
    result.points.push_back({t, wall, t * G, ppl});
    excluded += std::chrono::duration<double>(Clock::now() - t0).count();
  };
  for (std::uint64_t t = 0; t < iterations; ++t) {
    Stream rng{seed, 0, 0, t};
    for (auto& i : batch) i = rng.below(n);
    oracle.batch_grad(batch, lambda, g);  // g = lambda - lambda_hat
    const double rho = rate(t);
    // (1 - rho) lambda + rho lambda_hat, written as lambda - rho g
    for (std::size_t k = 0; k < lambda.size(); ++k) lambda[k] -= rho * g[k];
    for (std::size_t k = 0; k < lambda.size(); ++k) {
      if (!(lambda[k] > 0.0)) ++result.nonpositive_entries;
    }
    if (eval_every && (t + 1) % eval_every == 0 && t + 1 < iterations) evaluate(t + 1);
  }
  evaluate(iterations);
  result.stats.iterations = iterations;
  result.stats.wall_clock_s = result.points.back().wall_clock_s;
  result.model = oracle.model_at(lambda);
  return result;
}

SviResult run_dpsvi(const engine::RunConfig& config, const LdaOracle& oracle, const Corpus& heldout,
                    std::uint64_t eval_every) {
  const std::uint64_t G = config.batch_size;
  std::vector<SviPoint> points;
  std::uint64_t nonpositive = 0;
  engine::MasterHooks hooks;
  hooks.on_update = [&](const engine::Progress& p) {
    for (double x : p.v.values()) {
      if (!(x > 0.0)) ++nonpositive;
    }
    if ((eval_every && p.t % eval_every == 0) || p.t == config.T) {
      const LdaModel m = oracle.model_at({p.v.values().begin(), p.v.values().end()});
      const double ppl = perplexity(m, heldout, oracle.params().tol, oracle.params().max_iters);
      points.push_back({p.t, p.wall_clock_s, p.stats.effective_gradients * G, ppl});
    }
  };
  engine::MasterResult r = engine::run_dpsgd(config, oracle, hooks);
  auto values = std::move(r.v).release();
  return SviResult{oracle.model_at(std::move(values)), std::move(points), std::move(r.stats), nonpositive};
}

}  // namespace dpsgd::lda
