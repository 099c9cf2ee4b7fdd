#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "lexlift/w2v.hpp"

namespace lexlift::kernels {

// One logistic update against a single output row. Accumulates
// g * out_row into hidden_err, where g = alpha * (label - s(h . out_row)), and
// moves out_row by g * hidden when update_output is set. Returns the
// example's loss term -log s(+-h . out_row).
template <class Real>
Real sgns_pair(std::span<const Real> hidden, Real* out_row, Real label, Real alpha,
               std::span<Real> hidden_err, bool update_output) {
  const std::size_t dim = hidden.size();
  Real f = 0;
  for (std::size_t c = 0; c < dim; ++c) f += hidden[c] * out_row[c];
  const Real sigma = Real(1) / (Real(1) + std::exp(-f));
  const Real g = alpha * (label - sigma);
  for (std::size_t c = 0; c < dim; ++c) hidden_err[c] += g * out_row[c];
  if (update_output) {
    for (std::size_t c = 0; c < dim; ++c) out_row[c] += g * hidden[c];
  }
  // -log s(x) = log(1 + e^-x), with x = f for positives and -f for negatives.
  const Real x = label > Real(0.5) ? f : -f;
  return x > Real(0) ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

namespace serial {
/// Single-threaded reference trainer; bit-reproducible for a fixed seed.
w2v::TrainingOutput train_cbow(const w2v::EncodedCorpus& corpus, const Vocab& vocab,
                               const w2v::W2VConfig& config);
}  // namespace serial

namespace omp {
/// Hogwild trainer: workers update the shared tables without locks. With one
/// worker it performs the same arithmetic as the serial kernel.
w2v::TrainingOutput train_cbow(const w2v::EncodedCorpus& corpus, const Vocab& vocab,
                               const w2v::W2VConfig& config);
}  // namespace omp

}  // namespace lexlift::kernels
