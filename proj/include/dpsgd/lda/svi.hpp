#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "dpsgd/engine/config.hpp"
#include "dpsgd/engine/master.hpp"
#include "dpsgd/lda/model.hpp"
#include "dpsgd/problems/oracle.hpp"

namespace dpsgd::lda {

/// LDA as an engine oracle over the flattened lambda. The "gradient" of a
/// document batch at x is x - lambda_hat(x), so a descent step
/// u <- u - eta (u - lambda_hat) is the SVI step toward lambda_hat.
class LdaOracle final : public problems::GradOracle {
 public:
  LdaOracle(std::shared_ptr<const Corpus> train, LdaParams params);

  std::string_view name() const noexcept override { return "lda"; }
  std::size_t samples() const noexcept override { return train_->docs.size(); }
  std::size_t dim() const noexcept override { return params_.K * train_->vocab_size; }

  void sample_grad(std::size_t i, std::span<const double> x, std::span<double> out) const override;
  /// Negative per-document ELBO with lambda = x held fixed.
  double sample_loss(std::size_t i, std::span<const double> x) const override;
  /// x - (zeta + (n / G) sum_j E[t_j]) over the G documents in `indices`.
  void batch_grad(std::span<const std::size_t> indices, std::span<const double> x,
                  std::span<double> out) const override;
  /// Gamma(100, 0.01) draws.
  std::vector<double> initial_point(std::uint64_t seed) const override;

  const LdaParams& params() const noexcept { return params_; }
  const Corpus& train() const noexcept { return *train_; }
  LdaModel model_at(std::vector<double> lambda) const;

 private:
  std::shared_ptr<const Corpus> train_;
  LdaParams params_;
};

struct SviPoint {
  std::uint64_t t = 0;
  double wall_clock_s = 0.0;
  std::uint64_t effective_docs_seen = 0;
  double heldout_perplexity = 0.0;
};

struct SviResult {
  LdaModel model;
  std::vector<SviPoint> points;
  engine::MasterStats stats;
  /// Global lambda entries found non-positive after an update (clamped on read).
  std::uint64_t nonpositive_entries = 0;
};

/// Serial SVI: lambda <- (1 - rho_t) lambda + rho_t lambda_hat over batches of
/// G documents drawn from the stream (seed, 0, 0, t). Perplexity is evaluated
/// every `eval_every` iterations (0 = only at the end) outside the timed region.
SviResult run_serial_svi(const LdaOracle& oracle, const Corpus& heldout, std::uint64_t iterations, std::size_t G,
                         const std::function<double(std::uint64_t)>& rate, std::uint64_t seed,
                         std::uint64_t eval_every = 0);

/// DPSVI on the engine. config.batch_size is G; perplexity is evaluated every
/// `eval_every` master iterations (0 = only at the end).
SviResult run_dpsvi(const engine::RunConfig& config, const LdaOracle& oracle, const Corpus& heldout,
                    std::uint64_t eval_every = 0);

}  // namespace dpsgd::lda
