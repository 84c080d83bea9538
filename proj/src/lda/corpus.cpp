#include "dpsgd/lda/corpus.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "dpsgd/error.hpp"
#include "dpsgd/rng.hpp"

namespace dpsgd::lda {

std::uint64_t Doc::length() const noexcept { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

std::uint64_t Corpus::total_words() const noexcept {
  std::uint64_t n = 0;
  for (const auto& d : docs) n += d.length();
  return n;
}

void Corpus::validate() const {
  if (vocab_size == 0) throw ConfigError("corpus: vocabulary is empty");
  if (!vocab.empty() && vocab.size() != vocab_size) throw ConfigError("corpus: vocab list size differs from V");
  for (const auto& d : docs) {
    if (d.words.size() != d.counts.size()) throw ConfigError("corpus: words and counts differ in length");
    for (std::size_t j = 0; j < d.words.size(); ++j) {
      if (d.words[j] >= vocab_size) throw ConfigError("corpus: word id out of range");
      if (d.counts[j] == 0) throw ConfigError("corpus: zero count");
    }
  }
}

namespace {

// Parses one line into exactly `n` unsigned integers.
template <std::size_t N>
std::array<std::uint64_t, N> parse_ints(const std::string& line, std::size_t lineno, const char* what) {
  std::istringstream in(line);
  std::array<std::uint64_t, N> out{};
  for (auto& v : out) {
    std::string tok;
    if (!(in >> tok)) throw ParseError(std::string("expected ") + what, lineno);
    if (tok.find_first_not_of("0123456789") != std::string::npos) {
      throw ParseError("not a nonnegative integer: '" + tok + "'", lineno);
    }
    try {
      v = std::stoull(tok);
    } catch (const std::exception&) {
      throw ParseError("integer out of range: '" + tok + "'", lineno);
    }
  }
  std::string extra;
  if (in >> extra) throw ParseError("trailing token '" + extra + "'", lineno);
  return out;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

Corpus load_uci_bow(const std::string& docword_path, const std::string& vocab_path) {
  std::ifstream in(docword_path);
  if (!in) throw ParseError("cannot open " + docword_path, 0);
  std::string line;
  std::size_t lineno = 0;
  std::array<std::uint64_t, 3> header{};
  for (std::size_t h = 0; h < 3; ++h) {
    if (!std::getline(in, line)) throw ParseError("missing header line", lineno + 1);
    ++lineno;
    header[h] = parse_ints<1>(line, lineno, "header value")[0];
  }
  const auto [D, W, nnz] = header;
  if (W == 0 || W > UINT32_MAX) throw ParseError("vocabulary size must be in [1, 2^32)", 2);

  Corpus corpus;
  corpus.vocab_size = W;
  corpus.docs.resize(D);
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> seen(D);
  std::uint64_t entries = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto [doc, word, count] = parse_ints<3>(line, lineno, "docID wordID count");
    if (doc < 1 || doc > D) throw ParseError("docID " + std::to_string(doc) + " out of range", lineno);
    if (word < 1 || word > W) throw ParseError("wordID " + std::to_string(word) + " out of range", lineno);
    if (count < 1 || count > UINT32_MAX) throw ParseError("count must be >= 1", lineno);
    Doc& d = corpus.docs[doc - 1];
    const auto w = static_cast<std::uint32_t>(word - 1);
    if (std::find(d.words.begin(), d.words.end(), w) != d.words.end()) {
      throw ParseError("duplicate entry for doc " + std::to_string(doc) + " word " + std::to_string(word), lineno);
    }
    d.words.push_back(w);
    d.counts.push_back(static_cast<std::uint32_t>(count));
    ++entries;
  }
  if (entries != nnz) {
    throw ParseError("NNZ header says " + std::to_string(nnz) + " but body has " + std::to_string(entries) + " entries",
                     3);
  }

  if (!vocab_path.empty()) {
    std::ifstream vin(vocab_path);
    if (!vin) throw ParseError("cannot open " + vocab_path, 0);
    std::size_t vline = 0;
    while (std::getline(vin, line)) {
      ++vline;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (blank(line)) {
        if (corpus.vocab.size() == W) continue;  // tolerate trailing blank lines
        throw ParseError("empty vocabulary term", vline);
      }
      corpus.vocab.push_back(line);
    }
    if (corpus.vocab.size() != W) {
      throw ParseError("vocabulary has " + std::to_string(corpus.vocab.size()) + " terms, header says " +
                           std::to_string(W),
                       vline);
    }
  }
  return corpus;
}

void write_uci_bow(const Corpus& corpus, const std::string& docword_path, const std::string& vocab_path) {
  corpus.validate();
  std::ofstream out(docword_path);
  if (!out) throw ConfigError("cannot write " + docword_path);
  std::uint64_t nnz = 0;
  for (const auto& d : corpus.docs) nnz += d.words.size();
  out << corpus.docs.size() << '\n' << corpus.vocab_size << '\n' << nnz << '\n';
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    const Doc& d = corpus.docs[i];
    for (std::size_t j = 0; j < d.words.size(); ++j) out << i + 1 << ' ' << d.words[j] + 1 << ' ' << d.counts[j] << '\n';
  }
  if (!out) throw ConfigError("write failed: " + docword_path);
  if (vocab_path.empty()) return;
  std::ofstream vout(vocab_path);
  if (!vout) throw ConfigError("cannot write " + vocab_path);
  for (const auto& term : corpus.vocab) vout << term << '\n';
}

SyntheticCorpus generate_lda_corpus(std::size_t K, std::size_t V, std::size_t docs, std::size_t doc_length,
                                    double doc_alpha, double topic_concentration, std::uint64_t seed) {
  if (K == 0 || V == 0 || doc_length == 0) throw ConfigError("synthetic corpus: K, V and doc_length must be positive");
  Stream rng{seed, 0x1DA};
  auto dirichlet = [&rng](std::size_t n, double a) {
    std::gamma_distribution<double> g(a, 1.0);
    std::vector<double> x(n);
    double s = 0.0;
    for (double& v : x) {
      v = g(rng);
      s += v;
    }
    if (s <= 0.0) {
      // All draws underflowed; fall back to a point mass.
      std::fill(x.begin(), x.end(), 0.0);
      x[rng.below(n)] = 1.0;
      return x;
    }
    for (double& v : x) v /= s;
    return x;
  };

  SyntheticCorpus out;
  out.K = K;
  out.topics.reserve(K * V);
  for (std::size_t k = 0; k < K; ++k) {
    const auto row = dirichlet(V, topic_concentration);
    out.topics.insert(out.topics.end(), row.begin(), row.end());
  }
  std::vector<std::discrete_distribution<std::uint32_t>> word_dist;
  for (std::size_t k = 0; k < K; ++k) {
    word_dist.emplace_back(out.topics.begin() + static_cast<std::ptrdiff_t>(k * V),
                           out.topics.begin() + static_cast<std::ptrdiff_t>((k + 1) * V));
  }
  out.corpus.vocab_size = V;
  out.corpus.docs.reserve(docs);
  std::vector<std::uint32_t> counts(V);
  for (std::size_t d = 0; d < docs; ++d) {
    const auto theta = dirichlet(K, doc_alpha);
    std::discrete_distribution<std::size_t> topic_dist(theta.begin(), theta.end());
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t n = 0; n < doc_length; ++n) ++counts[word_dist[topic_dist(rng)](rng)];
    Doc doc;
    for (std::uint32_t w = 0; w < V; ++w) {
      if (counts[w]) {
        doc.words.push_back(w);
        doc.counts.push_back(counts[w]);
      }
    }
    out.corpus.docs.push_back(std::move(doc));
  }
  return out;
}

std::pair<Corpus, Corpus> split_heldout(const Corpus& corpus, std::size_t every) {
  if (every < 2) throw ConfigError("split_heldout: every must be >= 2");
  Corpus train{corpus.vocab_size, {}, corpus.vocab};
  Corpus test{corpus.vocab_size, {}, corpus.vocab};
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    ((i + 1) % every == 0 ? test : train).docs.push_back(corpus.docs[i]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace dpsgd::lda
