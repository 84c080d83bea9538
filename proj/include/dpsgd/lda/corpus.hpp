#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dpsgd::lda {

/// Bag of words: distinct word ids with their counts (>= 1).
struct Doc {
  std::vector<std::uint32_t> words;
  std::vector<std::uint32_t> counts;

  std::uint64_t length() const noexcept;
  bool empty() const noexcept { return words.empty(); }
  friend bool operator==(const Doc&, const Doc&) = default;
};

struct Corpus {
  std::size_t vocab_size = 0;
  std::vector<Doc> docs;
  std::vector<std::string> vocab;  // may be empty

  std::uint64_t total_words() const noexcept;
  /// Throws ConfigError if a word id is out of range or a count is zero.
  void validate() const;
};

/// UCI bag-of-words: three header lines (D, W, NNZ) then `docID wordID count`
/// triples with 1-based ids. `vocab_path` may be empty; otherwise it must hold
/// exactly W terms, one per line. Throws ParseError with the line number.
Corpus load_uci_bow(const std::string& docword_path, const std::string& vocab_path = {});

/// Inverse of load_uci_bow. Writes the vocab file only when `vocab_path` is
/// non-empty.
void write_uci_bow(const Corpus& corpus, const std::string& docword_path, const std::string& vocab_path = {});

/// Corpus drawn from the LDA generative model with known topics.
struct SyntheticCorpus {
  Corpus corpus;
  std::vector<double> topics;  // K x V row-major, rows sum to 1
  std::size_t K = 0;
};

/// Topics ~ Dirichlet(topic_concentration), theta_d ~ Dirichlet(doc_alpha),
/// doc length `doc_length`.
SyntheticCorpus generate_lda_corpus(std::size_t K, std::size_t V, std::size_t docs, std::size_t doc_length,
                                    double doc_alpha, double topic_concentration, std::uint64_t seed);

/// Splits off every `every`-th document (from index `every - 1`) as held-out.
std::pair<Corpus, Corpus> split_heldout(const Corpus& corpus, std::size_t every);

}  // namespace dpsgd::lda
