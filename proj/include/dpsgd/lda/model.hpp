#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dpsgd/lda/corpus.hpp"

namespace dpsgd::lda {

struct LdaParams {
  std::size_t K = 50;
  double zeta = 0.01;       // symmetric Dirichlet prior on topics
  double alpha_doc = 0.1;   // symmetric Dirichlet prior on document topic mixtures
  double tol = 1e-4;        // E-step stop: mean |delta gamma|
  int max_iters = 100;
};

/// Global variational parameter lambda (K x V, row-major, all positive).
class LdaModel {
 public:
  LdaModel(std::size_t K, std::size_t V, double zeta, double alpha_doc, std::size_t n_docs,
           std::vector<double> lambda);
  /// lambda entries drawn from Gamma(shape 100, scale 0.01).
  static LdaModel random_init(std::size_t K, std::size_t V, double zeta, double alpha_doc, std::size_t n_docs,
                              std::uint64_t seed);
  /// Every topic uniform over the vocabulary.
  static LdaModel uniform(std::size_t K, std::size_t V, double zeta, double alpha_doc, std::size_t n_docs);

  std::size_t K() const noexcept { return K_; }
  std::size_t V() const noexcept { return V_; }
  double zeta() const noexcept { return zeta_; }
  double alpha_doc() const noexcept { return alpha_; }
  std::size_t n_docs() const noexcept { return n_docs_; }
  std::span<const double> lambda() const noexcept { return lambda_; }
  double lambda(std::size_t k, std::size_t w) const noexcept { return lambda_[k * V_ + w]; }
  void set_lambda(std::vector<double> lambda);

 private:
  std::size_t K_;
  std::size_t V_;
  double zeta_;
  double alpha_;
  std::size_t n_docs_;
  std::vector<double> lambda_;
};

/// Per-document variational state. phi is stored per distinct word:
/// phi[j * K + k] for the j-th word of the document.
struct DocState {
  std::vector<double> gamma;
  std::vector<double> phi;
  int iterations = 0;
};

/// E[log beta_kw] for the distinct words of one document, computed from any
/// lambda (the model's or a worker's torn read). Entries of lambda below
/// `floor` are clamped to it first.
class DocWordWeights {
 public:
  DocWordWeights(std::span<const double> lambda, std::size_t K, std::size_t V, const Doc& doc, double floor = 0.0);

  std::size_t K() const noexcept { return K_; }
  std::size_t words() const noexcept { return J_; }
  double elog_beta(std::size_t j, std::size_t k) const noexcept { return elog_[j * K_ + k]; }

 private:
  std::size_t K_;
  std::size_t J_;
  std::vector<double> elog_;
};

/// Initial state: gamma = alpha + N/K, phi uniform.
DocState initial_doc_state(std::size_t K, double alpha_doc, const Doc& doc);
/// One coordinate-ascent sweep: phi given gamma, then gamma given phi.
/// Returns mean |delta gamma|.
double estep_sweep(const DocWordWeights& weights, double alpha_doc, const Doc& doc, DocState& state);
/// Per-document evidence lower bound with lambda held fixed.
double doc_elbo(const DocWordWeights& weights, double alpha_doc, const Doc& doc, const DocState& state);

/// Coordinate ascent from initial_doc_state until mean |delta gamma| < tol or
/// max_iters sweeps. phi is refreshed from the final gamma.
DocState local_estep(const DocWordWeights& weights, double alpha_doc, const Doc& doc, double tol, int max_iters);
DocState local_estep(const LdaModel& model, const Doc& doc, double tol = 1e-4, int max_iters = 100);

/// Adds count * phi of every word of the doc to stats (K x V).
void accumulate_sufficient_stats(const Doc& doc, const DocState& state, std::size_t K, std::size_t V,
                                 std::span<double> stats);

/// lambda_hat = zeta + (n / G) * sum over the batch of expected sufficient statistics.
std::vector<double> lambda_hat(const LdaModel& model, std::span<const Doc> batch, std::span<const DocState> states);

/// -(lambda_hat - lambda): the engine descends along this. Throws ConfigError
/// on a shape mismatch or an empty batch.
std::vector<double> natural_gradient(const LdaModel& model, std::span<const Doc> batch,
                                     std::span<const DocState> states);

/// Held-out perplexity exp(-sum_d log p(d) / sum_d N_d) with the plug-in
/// estimate p(w | d) = sum_k theta_k beta_kw, theta = gamma / sum gamma from a
/// full-document E-step, beta = lambda row-normalized. Throws ConfigError on
/// an empty corpus.
double perplexity(const LdaModel& model, const Corpus& held_out, double tol = 1e-4, int max_iters = 100);

/// Mean cosine similarity between learned topics (rows of lambda) and true
/// topics after greedy one-to-one matching.
double topic_recovery(std::span<const double> learned, std::span<const double> truth, std::size_t K, std::size_t V);

}  // namespace dpsgd::lda
