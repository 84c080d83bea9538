#include "dpsgd/lda/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dpsgd/error.hpp"
#include "dpsgd/lda/digamma.hpp"
#include "dpsgd/rng.hpp"

namespace dpsgd::lda {

LdaModel::LdaModel(std::size_t K, std::size_t V, double zeta, double alpha_doc, std::size_t n_docs,
                   std::vector<double> lambda)
    : K_(K), V_(V), zeta_(zeta), alpha_(alpha_doc), n_docs_(n_docs) {
  if (K == 0 || V == 0) throw ConfigError("LdaModel: K and V must be positive");
  if (!(zeta > 0.0) || !(alpha_doc > 0.0)) throw ConfigError("LdaModel: zeta and alpha_doc must be positive");
  if (n_docs == 0) throw ConfigError("LdaModel: n_docs must be positive");
  set_lambda(std::move(lambda));
}

void LdaModel::set_lambda(std::vector<double> lambda) {
  if (lambda.size() != K_ * V_) throw ConfigError("LdaModel: lambda must be K x V");
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (!(lambda[i] > 0.0) || !std::isfinite(lambda[i])) throw NumericFault("LdaModel: lambda entry not positive", i);
  }
  lambda_ = std::move(lambda);
}

LdaModel LdaModel::random_init(std::size_t K, std::size_t V, double zeta, double alpha_doc, std::size_t n_docs,
                               std::uint64_t seed) {
  Stream rng{seed, 0x1A3BDA};
  std::gamma_distribution<double> g(100.0, 0.01);
  std::vector<double> lambda(K * V);
  for (double& x : lambda) x = g(rng);
  return LdaModel(K, V, zeta, alpha_doc, n_docs, std::move(lambda));
}

LdaModel LdaModel::uniform(std::size_t K, std::size_t V, double zeta, double alpha_doc, std::size_t n_docs) {
  return LdaModel(K, V, zeta, alpha_doc, n_docs, std::vector<double>(K * V, 1.0));
}

DocWordWeights::DocWordWeights(std::span<const double> lambda, std::size_t K, std::size_t V, const Doc& doc,
                               double floor)
    : K_(K), J_(doc.words.size()), elog_(J_ * K) {
  if (lambda.size() != K * V) throw ConfigError("DocWordWeights: lambda must be K x V");
  for (std::size_t k = 0; k < K; ++k) {
    const double* row = lambda.data() + k * V;
    double sum = 0.0;
    for (std::size_t w = 0; w < V; ++w) sum += std::max(row[w], floor);
    const double psi_sum = digamma(sum);
    for (std::size_t j = 0; j < J_; ++j) {
      if (doc.words[j] >= V) throw ConfigError("DocWordWeights: word id out of range");
      elog_[j * K + k] = digamma(std::max(row[doc.words[j]], floor)) - psi_sum;
    }
  }
}

DocState initial_doc_state(std::size_t K, double alpha_doc, const Doc& doc) {
  DocState s;
  s.gamma.assign(K, alpha_doc + static_cast<double>(doc.length()) / static_cast<double>(K));
  s.phi.assign(doc.words.size() * K, 1.0 / static_cast<double>(K));
  return s;
}

namespace {

// phi rows from gamma: phi_jk proportional to exp(E log theta_k + E log beta_kj).
void update_phi(const DocWordWeights& weights, const std::vector<double>& elog_theta, DocState& state) {
  const std::size_t K = weights.K();
  for (std::size_t j = 0; j < weights.words(); ++j) {
    double* row = state.phi.data() + j * K;
    double mx = -INFINITY;
    for (std::size_t k = 0; k < K; ++k) {
      row[k] = elog_theta[k] + weights.elog_beta(j, k);
      mx = std::max(mx, row[k]);
    }
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      row[k] = std::exp(row[k] - mx);
      z += row[k];
    }
    for (std::size_t k = 0; k < K; ++k) row[k] /= z;
  }
}

}  // namespace

double estep_sweep(const DocWordWeights& weights, double alpha_doc, const Doc& doc, DocState& state) {
  const std::size_t K = weights.K();
  update_phi(weights, dirichlet_expectation(state.gamma), state);
  double change = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    double g = alpha_doc;
    for (std::size_t j = 0; j < doc.words.size(); ++j) g += doc.counts[j] * state.phi[j * K + k];
    change += std::fabs(g - state.gamma[k]);
    state.gamma[k] = g;
  }
  ++state.iterations;
  return change / static_cast<double>(K);
}

double doc_elbo(const DocWordWeights& weights, double alpha_doc, const Doc& doc, const DocState& state) {
  const std::size_t K = weights.K();
  const auto elog_theta = dirichlet_expectation(state.gamma);
  double elbo = 0.0;
  for (std::size_t j = 0; j < doc.words.size(); ++j) {
    for (std::size_t k = 0; k < K; ++k) {
      const double phi = state.phi[j * K + k];
      if (phi > 0.0) elbo += doc.counts[j] * phi * (elog_theta[k] + weights.elog_beta(j, k) - std::log(phi));
    }
  }
  double gamma_sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    elbo += (alpha_doc - state.gamma[k]) * elog_theta[k] + std::lgamma(state.gamma[k]);
    gamma_sum += state.gamma[k];
  }
  elbo += std::lgamma(K * alpha_doc) - K * std::lgamma(alpha_doc) - std::lgamma(gamma_sum);
  return elbo;
}

DocState local_estep(const DocWordWeights& weights, double alpha_doc, const Doc& doc, double tol, int max_iters) {
  if (doc.empty()) throw ConfigError("local_estep: empty document");
  DocState state = initial_doc_state(weights.K(), alpha_doc, doc);
  for (int it = 0; it < max_iters; ++it) {
    if (estep_sweep(weights, alpha_doc, doc, state) < tol) break;
  }
  update_phi(weights, dirichlet_expectation(state.gamma), state);
  return state;
}

DocState local_estep(const LdaModel& model, const Doc& doc, double tol, int max_iters) {
  const DocWordWeights weights(model.lambda(), model.K(), model.V(), doc);
  return local_estep(weights, model.alpha_doc(), doc, tol, max_iters);
}

void accumulate_sufficient_stats(const Doc& doc, const DocState& state, std::size_t K, std::size_t V,
                                 std::span<double> stats) {
  if (stats.size() != K * V || state.phi.size() != doc.words.size() * K) {
    throw ConfigError("sufficient statistics: shape mismatch");
  }
  for (std::size_t j = 0; j < doc.words.size(); ++j) {
    const double c = doc.counts[j];
    for (std::size_t k = 0; k < K; ++k) stats[k * V + doc.words[j]] += c * state.phi[j * K + k];
  }
}

std::vector<double> lambda_hat(const LdaModel& model, std::span<const Doc> batch, std::span<const DocState> states) {
  if (batch.empty()) throw ConfigError("natural_gradient: empty batch");
  if (batch.size() != states.size()) throw ConfigError("natural_gradient: batch and states differ in size");
  const std::size_t K = model.K();
  const std::size_t V = model.V();
  std::vector<double> stats(K * V, 0.0);
  for (std::size_t d = 0; d < batch.size(); ++d) {
    if (states[d].gamma.size() != K) throw ConfigError("natural_gradient: state has wrong K");
    accumulate_sufficient_stats(batch[d], states[d], K, V, stats);
  }
  const double scale = static_cast<double>(model.n_docs()) / static_cast<double>(batch.size());
  for (double& s : stats) s = model.zeta() + scale * s;
  return stats;
}

std::vector<double> natural_gradient(const LdaModel& model, std::span<const Doc> batch,
                                     std::span<const DocState> states) {
  std::vector<double> g = lambda_hat(model, batch, states);
  const auto lambda = model.lambda();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = lambda[i] - g[i];
  return g;
}

double perplexity(const LdaModel& model, const Corpus& held_out, double tol, int max_iters) {
  const std::size_t K = model.K();
  const std::size_t V = model.V();
  if (held_out.vocab_size != V) throw ConfigError("perplexity: vocabulary size differs from the model");
  std::vector<double> row_sum(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t w = 0; w < V; ++w) row_sum[k] += model.lambda(k, w);
  }
  double log_lik = 0.0;
  std::uint64_t words = 0;
  for (const Doc& doc : held_out.docs) {
    if (doc.empty()) continue;
    const DocState state = local_estep(model, doc, tol, max_iters);
    double gamma_sum = 0.0;
    for (double g : state.gamma) gamma_sum += g;
    for (std::size_t j = 0; j < doc.words.size(); ++j) {
      double p = 0.0;
      for (std::size_t k = 0; k < K; ++k) p += state.gamma[k] / gamma_sum * model.lambda(k, doc.words[j]) / row_sum[k];
      log_lik += doc.counts[j] * std::log(p);
    }
    words += doc.length();
  }
  if (words == 0) throw ConfigError("perplexity: held-out corpus has no words");
  return std::exp(-log_lik / static_cast<double>(words));
}

double topic_recovery(std::span<const double> learned, std::span<const double> truth, std::size_t K, std::size_t V) {
  if (K == 0 || learned.size() != K * V || truth.size() != K * V) throw ConfigError("topic_recovery: shape mismatch");
  auto norm = [V](const double* a) {
    double s = 0.0;
    for (std::size_t w = 0; w < V; ++w) s += a[w] * a[w];
    return std::sqrt(s);
  };
  std::vector<double> cos(K * K);
  for (std::size_t a = 0; a < K; ++a) {
    const double* x = learned.data() + a * V;
    for (std::size_t b = 0; b < K; ++b) {
      const double* y = truth.data() + b * V;
      double dot = 0.0;
      for (std::size_t w = 0; w < V; ++w) dot += x[w] * y[w];
      cos[a * K + b] = dot / (norm(x) * norm(y));
    }
  }
  std::vector<bool> used_a(K, false), used_b(K, false);
  double total = 0.0;
  for (std::size_t round = 0; round < K; ++round) {
    double best = -2.0;
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < K; ++a) {
      if (used_a[a]) continue;
      for (std::size_t b = 0; b < K; ++b) {
        if (!used_b[b] && cos[a * K + b] > best) {
          best = cos[a * K + b];
          ba = a;
          bb = b;
        }
      }
    }
    used_a[ba] = used_b[bb] = true;
    total += best;
  }
  return total / static_cast<double>(K);
}

}  // namespace dpsgd::lda
