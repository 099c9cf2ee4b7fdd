#pragma once

// Shared inner loop of the serial and OpenMP CBOW kernels. Both kernels drive
// the same CbowWorker so that a one-worker OpenMP run performs exactly the
// serial arithmetic.

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "lexlift/kernels/cbow.hpp"

namespace lexlift::kernels::detail {

struct CbowShared {
  float* input = nullptr;
  float* output = nullptr;
  std::size_t dim = 0;
  const w2v::UnigramTable* table = nullptr;
  std::vector<double> keep;  // per-id subsampling keep probability
  const w2v::W2VConfig* config = nullptr;
  std::uint64_t total_tokens = 0;  // epochs * corpus tokens
};

inline std::uint64_t worker_seed(std::uint64_t seed, int worker) {
  return seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(worker) * 0xD1B54A32D192ED03ULL + 1;
}

inline float learning_rate(const w2v::W2VConfig& config, std::uint64_t processed, std::uint64_t total) {
  const double progress = static_cast<double>(processed) / static_cast<double>(total + 1);
  return static_cast<float>(std::max(config.initial_lr * (1.0 - progress), config.lr_floor()));
}

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

class CbowWorker {
 public:
  CbowWorker(const CbowShared& shared, int worker)
      : shared_(shared),
        rng_(worker_seed(shared.config->seed, worker)),
        hidden_(shared.dim),
        err_(shared.dim) {}

  struct LineResult {
    double loss = 0.0;
    std::uint64_t examples = 0;
  };

  LineResult process_line(std::span<const TokenId> line, float alpha) {
    const auto& cfg = *shared_.config;
    sentence_.clear();
    for (TokenId id : line) {
      const double keep = shared_.keep[static_cast<std::size_t>(id)];
      if (keep >= 1.0 || uniform01(rng_) < keep) sentence_.push_back(id);
    }

    LineResult result;
    const auto n = static_cast<std::ptrdiff_t>(sentence_.size());
    const std::size_t dim = shared_.dim;
    for (std::ptrdiff_t pos = 0; pos < n; ++pos) {
      const TokenId center = sentence_[static_cast<std::size_t>(pos)];
      const auto shrink = static_cast<std::ptrdiff_t>(rng_() % static_cast<std::uint64_t>(cfg.window));
      const std::ptrdiff_t reach = cfg.window - shrink;
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, pos - reach);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, pos + reach);

      std::fill(hidden_.begin(), hidden_.end(), 0.0f);
      std::fill(err_.begin(), err_.end(), 0.0f);
      int context = 0;
      for (std::ptrdiff_t c = lo; c <= hi; ++c) {
        if (c == pos) continue;
        const float* v = shared_.input + static_cast<std::size_t>(sentence_[static_cast<std::size_t>(c)]) * dim;
        for (std::size_t d = 0; d < dim; ++d) hidden_[d] += v[d];
        ++context;
      }
      if (context == 0) continue;
      const float inv = 1.0f / static_cast<float>(context);
      for (float& h : hidden_) h *= inv;

      double loss = sgns_pair<float>(hidden_, shared_.output + static_cast<std::size_t>(center) * dim,
                                     1.0f, alpha, err_, true);
      for (int k = 0; k < cfg.negatives; ++k) {
        const TokenId target = shared_.table->at(rng_());
        if (target == center) continue;
        loss += sgns_pair<float>(hidden_, shared_.output + static_cast<std::size_t>(target) * dim,
                                 0.0f, alpha, err_, true);
      }
      // The reference tool applies the hidden-layer error to every context
      // vector without the 1/context factor.
      for (std::ptrdiff_t c = lo; c <= hi; ++c) {
        if (c == pos) continue;
        float* v = shared_.input + static_cast<std::size_t>(sentence_[static_cast<std::size_t>(c)]) * dim;
        for (std::size_t d = 0; d < dim; ++d) v[d] += err_[d];
      }
      result.loss += loss;
      ++result.examples;
    }
    return result;
  }

 private:
  const CbowShared& shared_;
  std::mt19937_64 rng_;
  std::vector<float> hidden_;
  std::vector<float> err_;
  std::vector<TokenId> sentence_;
};

// Shared setup: initial tables, subsampling probabilities, unigram table.
struct CbowSetup {
  w2v::TrainingOutput output;
  w2v::UnigramTable table;
  CbowShared shared;

  CbowSetup(const w2v::EncodedCorpus& corpus, const Vocab& vocab, const w2v::W2VConfig& config)
      : table(vocab, config.unigram_power, config.table_size) {
    config.validate(vocab.size());
    const auto dim = static_cast<std::size_t>(config.dim);
    output.input_vectors = w2v::initial_input_vectors(vocab.size(), dim, config.seed);
    output.output_vectors = EmbeddingTable(vocab.size(), dim);
    if (config.track_loss) {
      output.loss.buckets_per_epoch = config.loss_buckets_per_epoch;
      const auto buckets = static_cast<std::size_t>(config.epochs * config.loss_buckets_per_epoch);
      output.loss.loss_sum.assign(buckets, 0.0);
      output.loss.examples.assign(buckets, 0);
    }
    shared.input = output.input_vectors.data().data();
    shared.output = output.output_vectors.data().data();
    shared.dim = dim;
    shared.table = &table;
    shared.config = &config;
    shared.total_tokens = static_cast<std::uint64_t>(config.epochs) * corpus.ids.size();
    const double total = static_cast<double>(vocab.total_count());
    shared.keep.resize(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      const double f = total > 0 ? static_cast<double>(vocab.count(static_cast<TokenId>(i))) / total : 0.0;
      shared.keep[i] = f > 0 ? w2v::keep_probability(f, config.subsample_threshold) : 1.0;
    }
  }
};

inline std::size_t loss_bucket(int epoch, int buckets, std::uint64_t done, std::uint64_t span_tokens) {
  const auto frac = span_tokens == 0 ? 0.0 : static_cast<double>(done) / static_cast<double>(span_tokens);
  const int b = std::min(buckets - 1, static_cast<int>(frac * buckets));
  return static_cast<std::size_t>(epoch * buckets + b);
}

}  // namespace lexlift::kernels::detail
