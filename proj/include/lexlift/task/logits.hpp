#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lexlift::task {

/// Row-major per-position output vectors.
struct Logits {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Logits() = default;
  Logits(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }

  friend bool operator==(const Logits&, const Logits&) = default;
};

}  // namespace lexlift::task
