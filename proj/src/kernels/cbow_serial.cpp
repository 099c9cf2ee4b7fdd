#include "cbow_worker.hpp"

namespace lexlift::kernels::serial {

w2v::TrainingOutput train_cbow(const w2v::EncodedCorpus& corpus, const Vocab& vocab,
                               const w2v::W2VConfig& config) {
  detail::CbowSetup setup(corpus, vocab, config);
  detail::CbowWorker worker(setup.shared, 0);
  auto& loss = setup.output.loss;
  const std::uint64_t corpus_tokens = corpus.ids.size();

  std::uint64_t processed = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::uint64_t done = 0;
    for (std::size_t i = 0; i < corpus.line_count(); ++i) {
      const auto line = corpus.line(i);
      const float alpha = detail::learning_rate(config, processed, setup.shared.total_tokens);
      const auto result = worker.process_line(line, alpha);
      if (config.track_loss) {
        const auto b = detail::loss_bucket(epoch, loss.buckets_per_epoch, done, corpus_tokens);
        loss.loss_sum[b] += result.loss;
        loss.examples[b] += result.examples;
      }
      done += line.size();
      processed += line.size();
    }
  }
  setup.output.processed_tokens = processed;
  return std::move(setup.output);
}

}  // namespace lexlift::kernels::serial
