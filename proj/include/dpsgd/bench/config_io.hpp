#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpsgd/engine/config.hpp"
#include "dpsgd/lda/model.hpp"
#include "dpsgd/rl/hsa2c.hpp"

namespace dpsgd::bench {

using json = nlohmann::json;

/// Sweep over a base configuration. Each axis left empty keeps the base
/// value; runs are the Cartesian product in the order nW, p, B, M, T.
struct ExperimentSpec {
  engine::RunConfig base;
  std::vector<std::uint32_t> nW;
  std::vector<std::uint32_t> p;
  std::vector<std::uint64_t> B;
  std::vector<std::uint32_t> M;
  std::vector<std::uint64_t> T;
  /// Run index whose time-to-target is the TSP reference.
  std::size_t reference = 0;
  /// Loss level for time-to-target; unset means final-time ratios.
  std::optional<double> target_loss;
  /// Move a constant rho from the base (p, B, M) to each run's (p, B, M).
  bool rescale_rho = true;

  void validate() const;
};

struct SyntheticCorpusSpec {
  std::size_t K = 5;
  std::size_t V = 100;
  std::size_t docs = 500;
  std::size_t doc_length = 100;
  double doc_alpha = 0.2;
  double topic_concentration = 0.2;
  std::uint64_t seed = 1;
};

struct SviSpec {
  engine::RunConfig run;
  lda::LdaParams lda;
  /// UCI bag-of-words input; the synthetic generator is used when empty.
  std::string docword;
  std::string vocab;
  SyntheticCorpusSpec synthetic;
  std::size_t heldout_every = 10;
  std::uint64_t eval_every = 10;
  /// Serial SVI instead of DPSVI, over T * M * p * B batches at rate eta.
  bool serial = false;

  void validate() const;
};

struct RlSpec {
  engine::RunConfig run;
  rl::RlParams rl;

  void validate() const;
};

/// Parsers reject unknown keys and ill-typed values with ConfigError and
/// validate the result.
engine::RunConfig run_config_from_json(const json& j);
ExperimentSpec experiment_from_json(const json& j);
SviSpec svi_from_json(const json& j);
RlSpec rl_from_json(const json& j);

json to_json(const engine::RunConfig& c);
json to_json(const ExperimentSpec& s);
json to_json(const SviSpec& s);
json to_json(const RlSpec& s);

/// Parses a JSON file. Throws ConfigError on I/O or syntax errors.
json load_json(const std::string& path);

}  // namespace dpsgd::bench
