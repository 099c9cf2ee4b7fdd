#include <omp.h>

#include <atomic>

#include "cbow_worker.hpp"

namespace lexlift::kernels::omp {
namespace {

// Splits lines into `parts` contiguous ranges of roughly equal token count.
std::vector<std::size_t> partition_lines(const w2v::EncodedCorpus& corpus, int parts) {
  std::vector<std::size_t> bounds{0};
  const std::size_t total = corpus.ids.size();
  std::size_t line = 0;
  for (int p = 1; p < parts; ++p) {
    const std::size_t target = total * static_cast<std::size_t>(p) / static_cast<std::size_t>(parts);
    while (line < corpus.line_count() && corpus.line_offsets[line] < target) ++line;
    bounds.push_back(line);
  }
  bounds.push_back(corpus.line_count());
  return bounds;
}

}  // namespace

w2v::TrainingOutput train_cbow(const w2v::EncodedCorpus& corpus, const Vocab& vocab,
                               const w2v::W2VConfig& config) {
  detail::CbowSetup setup(corpus, vocab, config);
  const int workers = std::max(1, config.workers);
  const auto bounds = partition_lines(corpus, workers);
  std::atomic<std::uint64_t> processed{0};
  auto& loss = setup.output.loss;

#pragma omp parallel num_threads(workers)
  {
    const int tid = omp_get_thread_num();
    const int nthreads = omp_get_num_threads();
    // If the runtime granted fewer threads, each one walks several ranges.
    for (int part = tid; part < workers; part += nthreads) {
      detail::CbowWorker worker(setup.shared, part);
      const std::size_t first = bounds[static_cast<std::size_t>(part)];
      const std::size_t last = bounds[static_cast<std::size_t>(part) + 1];
      const std::uint64_t span_tokens = corpus.line_offsets[last] - corpus.line_offsets[first];
      std::vector<double> local_loss(loss.loss_sum.size(), 0.0);
      std::vector<std::uint64_t> local_examples(loss.examples.size(), 0);

      for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::uint64_t done = 0;
        for (std::size_t i = first; i < last; ++i) {
          const auto line = corpus.line(i);
          const float alpha = detail::learning_rate(
              config, processed.load(std::memory_order_relaxed), setup.shared.total_tokens);
          const auto result = worker.process_line(line, alpha);
          if (config.track_loss) {
            const auto b = detail::loss_bucket(epoch, loss.buckets_per_epoch, done, span_tokens);
            local_loss[b] += result.loss;
            local_examples[b] += result.examples;
          }
          done += line.size();
          processed.fetch_add(line.size(), std::memory_order_relaxed);
        }
      }
      if (config.track_loss) {
#pragma omp critical(lexlift_cbow_loss)
        for (std::size_t b = 0; b < local_loss.size(); ++b) {
          loss.loss_sum[b] += local_loss[b];
          loss.examples[b] += local_examples[b];
        }
      }
    }
  }
  setup.output.processed_tokens = processed.load();
  return std::move(setup.output);
}

}  // namespace lexlift::kernels::omp
