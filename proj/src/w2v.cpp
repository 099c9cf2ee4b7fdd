#include "lexlift/w2v.hpp"

#include <cmath>

#include "lexlift/corpus.hpp"
#include "lexlift/error.hpp"
#include "lexlift/kernels/cbow.hpp"
#include "lexlift/matrix_file.hpp"

namespace lexlift::w2v {

void W2VConfig::validate(std::size_t vocab_size) const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid word2vec config: " + what); };
  if (dim < 1) fail("dim must be >= 1");
  if (window < 1) fail("window must be >= 1");
  if (negatives < 1) fail("negatives must be >= 1");
  if (!(initial_lr > 0.0)) fail("initial_lr must be > 0");
  if (epochs < 0) fail("epochs must be >= 0");
  if (workers < 1) fail("workers must be >= 1");
  if (subsample_threshold < 0.0) fail("subsample_threshold must be >= 0");
  if (loss_buckets_per_epoch < 1) fail("loss_buckets_per_epoch must be >= 1");
  if (table_size < vocab_size) {
    fail("table_size " + std::to_string(table_size) + " is smaller than the vocabulary (" +
         std::to_string(vocab_size) + ")");
  }
}

double keep_probability(double relative_frequency, double threshold) noexcept {
  if (threshold <= 0.0 || relative_frequency <= 0.0) return 1.0;
  const double ratio = threshold / relative_frequency;
  return std::min(1.0, std::sqrt(ratio) + ratio);
}

UnigramTable::UnigramTable(const Vocab& vocab, double power, std::uint64_t table_size) {
  if (vocab.empty()) throw ConfigError("cannot build a unigram table over an empty vocabulary");
  if (table_size < vocab.size()) throw ConfigError("unigram table smaller than vocabulary");
  double norm = 0.0;
  for (auto c : vocab.counts()) norm += std::pow(static_cast<double>(c), power);
  if (!(norm > 0.0)) throw ConfigError("unigram table needs at least one positive count");

  entries_.resize(table_size);
  std::size_t word = 0;
  const std::size_t last = vocab.size() - 1;
  double cumulative = std::pow(static_cast<double>(vocab.counts()[0]), power) / norm;
  for (std::uint64_t a = 0; a < table_size; ++a) {
    entries_[a] = static_cast<TokenId>(word);
    if (static_cast<double>(a + 1) / static_cast<double>(table_size) > cumulative && word < last) {
      ++word;
      cumulative += std::pow(static_cast<double>(vocab.counts()[word]), power) / norm;
    }
  }
}

TokenId negative_sample(const UnigramTable& table, std::mt19937_64& rng) { return table.at(rng()); }

EncodedCorpus encode_corpus(const std::vector<std::string>& lines, const Vocab& vocab) {
  EncodedCorpus corpus;
  for (const auto& line : lines) {
    for (const auto& token : corpus::split_whitespace(line)) {
      if (auto id = vocab.find(token)) corpus.ids.push_back(*id);
    }
    corpus.line_offsets.push_back(corpus.ids.size());
  }
  return corpus;
}

EmbeddingTable initial_input_vectors(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
  EmbeddingTable table(vocab_size, dim);
  std::mt19937_64 rng(seed ^ 0x5DEECE66DULL);
  const double scale = 1.0 / static_cast<double>(dim);
  for (float& v : table.data()) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    v = static_cast<float>((u - 0.5) * scale);
  }
  return table;
}

TrainingOutput train(const EncodedCorpus& corpus, const Vocab& vocab, const W2VConfig& config) {
  if (vocab.empty()) throw ConfigError("cannot train word vectors on an empty vocabulary");
  if (config.workers > 1) return kernels::omp::train_cbow(corpus, vocab, config);
  return kernels::serial::train_cbow(corpus, vocab, config);
}

namespace {

void check_lengths(std::span<const double> hidden, std::span<const double> positive,
                   const std::vector<std::span<const double>>& negatives) {
  if (positive.size() != hidden.size()) throw DimensionError("positive vector length mismatch");
  for (const auto& n : negatives) {
    if (n.size() != hidden.size()) throw DimensionError("negative vector length mismatch");
  }
}

double accumulate(std::span<const double> hidden, std::span<const double> positive,
                  const std::vector<std::span<const double>>& negatives, std::vector<double>& err) {
  check_lengths(hidden, positive, negatives);
  err.assign(hidden.size(), 0.0);
  // Copies keep the inputs immutable; update_output is off anyway.
  std::vector<double> row(positive.begin(), positive.end());
  double loss = kernels::sgns_pair<double>(hidden, row.data(), 1.0, 1.0, err, false);
  for (const auto& neg : negatives) {
    row.assign(neg.begin(), neg.end());
    loss += kernels::sgns_pair<double>(hidden, row.data(), 0.0, 1.0, err, false);
  }
  return loss;
}

}  // namespace

double sgns_loss(std::span<const double> hidden, std::span<const double> positive,
                 const std::vector<std::span<const double>>& negatives) {
  std::vector<double> err;
  return accumulate(hidden, positive, negatives, err);
}

std::vector<double> sgns_loss_gradient(std::span<const double> hidden, std::span<const double> positive,
                                       const std::vector<std::span<const double>>& negatives) {
  std::vector<double> err;
  accumulate(hidden, positive, negatives, err);
  // The kernel accumulates the descent direction; the gradient is its negation.
  for (double& e : err) e = -e;
  return err;
}

std::string vocab_sidecar(const std::string& vectors_path) { return vectors_path + ".vocab.txt"; }

void save_vectors(const std::string& out, const EmbeddingTable& table, const Vocab& vocab) {
  if (table.rows() != vocab.size()) {
    throw DimensionError("embedding rows (" + std::to_string(table.rows()) +
                         ") do not match vocabulary size (" + std::to_string(vocab.size()) + ")");
  }
  write_matrix(out, table);
  write_vocab_file(vocab_sidecar(out), vocab);
}

LoadedVectors load_vectors(const std::string& path) {
  LoadedVectors loaded{read_matrix(path), read_vocab_file(vocab_sidecar(path))};
  if (loaded.table.rows() != loaded.vocab.size()) {
    throw FormatError(path + ": " + std::to_string(loaded.table.rows()) + " rows but vocabulary has " +
                      std::to_string(loaded.vocab.size()) + " tokens");
  }
  return loaded;
}

}  // namespace lexlift::w2v
