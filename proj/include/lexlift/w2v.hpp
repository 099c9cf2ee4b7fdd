#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lexlift/embedding.hpp"
#include "lexlift/vocab.hpp"

namespace lexlift::w2v {

/// CBOW + negative sampling hyperparameters. Defaults are the reference
/// word2vec tool's CBOW defaults; only `dim` is expected to change.
struct W2VConfig {
  int dim = 768;
  int window = 5;
  int negatives = 5;
  double subsample_threshold = 1e-3;
  std::uint64_t min_count = 5;
  int epochs = 5;
  double initial_lr = 0.05;
  double unigram_power = 0.75;
  std::uint64_t table_size = 100'000'000;
  std::uint64_t seed = 1;
  int workers = 1;
  // Records per-bucket average loss (costs one log per sampled pair).
  bool track_loss = false;
  int loss_buckets_per_epoch = 10;

  /// Throws ConfigError on a violated invariant.
  void validate(std::size_t vocab_size) const;

  double lr_floor() const noexcept { return initial_lr * 1e-4; }
};

/// Probability that one occurrence of a word with relative frequency f is
/// kept: min(1, sqrt(t/f) + t/f). A threshold <= 0 disables subsampling.
double keep_probability(double relative_frequency, double threshold) noexcept;

/// Unigram sampling table: token ids repeated proportionally to
/// count^power, so a uniform index draw is a draw from the smoothed unigram
/// distribution.
class UnigramTable {
 public:
  UnigramTable(const Vocab& vocab, double power, std::uint64_t table_size);

  TokenId at(std::uint64_t index) const noexcept { return entries_[index % entries_.size()]; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::span<const TokenId> entries() const noexcept { return entries_; }

 private:
  std::vector<TokenId> entries_;
};

/// Draws one negative-sample candidate.
TokenId negative_sample(const UnigramTable& table, std::mt19937_64& rng);

/// Corpus with tokens mapped to vocabulary ids; out-of-vocabulary tokens are
/// dropped. Every input line is a context boundary.
struct EncodedCorpus {
  std::vector<TokenId> ids;
  std::vector<std::size_t> line_offsets{0};  // line i = ids[offsets[i], offsets[i+1])

  std::size_t line_count() const noexcept { return line_offsets.size() - 1; }
  std::span<const TokenId> line(std::size_t i) const {
    return std::span(ids).subspan(line_offsets[i], line_offsets[i + 1] - line_offsets[i]);
  }
};

EncodedCorpus encode_corpus(const std::vector<std::string>& lines, const Vocab& vocab);

struct LossTrace {
  int buckets_per_epoch = 0;
  std::vector<double> loss_sum;         // epochs * buckets_per_epoch
  std::vector<std::uint64_t> examples;  // number of CBOW examples per bucket

  double mean(std::size_t bucket) const {
    return examples[bucket] == 0 ? 0.0 : loss_sum[bucket] / static_cast<double>(examples[bucket]);
  }
};

struct TrainingOutput {
  EmbeddingTable input_vectors;   // exported as E_W2V
  EmbeddingTable output_vectors;  // negative-sampling output weights
  LossTrace loss;
  std::uint64_t processed_tokens = 0;
};

/// Input vectors uniform in [-0.5/dim, 0.5/dim), derived from the seed only.
EmbeddingTable initial_input_vectors(std::size_t vocab_size, std::size_t dim, std::uint64_t seed);

/// Trains CBOW with negative sampling. `workers == 1` runs the serial
/// reference kernel (bit-reproducible for a fixed seed); more workers run the
/// lock-free OpenMP kernel.
TrainingOutput train(const EncodedCorpus& corpus, const Vocab& vocab, const W2VConfig& config);

/// Per-example negative-sampling objective
///   L = -log s(u_o . h) - sum_k log s(-u_k . h)
/// evaluated in double precision, and its gradient with respect to h.
double sgns_loss(std::span<const double> hidden, std::span<const double> positive,
                 const std::vector<std::span<const double>>& negatives);
std::vector<double> sgns_loss_gradient(std::span<const double> hidden,
                                       std::span<const double> positive,
                                       const std::vector<std::span<const double>>& negatives);

/// Writes `<out>` (matrix file) and `<out>.vocab.txt`.
void save_vectors(const std::string& out, const EmbeddingTable& table, const Vocab& vocab);
struct LoadedVectors {
  EmbeddingTable table;
  Vocab vocab;
};
LoadedVectors load_vectors(const std::string& path);
std::string vocab_sidecar(const std::string& vectors_path);

}  // namespace lexlift::w2v
