#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "lexlift/embedding.hpp"

// Row-parallel dense kernels used by alignment and lexicon extension.
namespace lexlift::kernels {

/// Row-major double matrix view, rows x cols.
struct MatrixView {
  std::span<const double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

struct ScoredRow {
  std::size_t row = 0;
  double score = 0.0;
};

/// out[i] = float(map * src[i]); each entry is a double dot product
/// accumulated in column order, so the two variants agree bit for bit.
namespace serial {
EmbeddingTable project_rows(const MatrixView& map, const EmbeddingTable& src);
/// k best rows by dot product with `query`, score descending, ties by row.
std::vector<ScoredRow> top_k_dot(const EmbeddingTable& rows, std::span<const double> query,
                                 std::size_t k, std::optional<std::size_t> exclude = std::nullopt);
}  // namespace serial

namespace omp {
EmbeddingTable project_rows(const MatrixView& map, const EmbeddingTable& src, int workers = 0);
std::vector<ScoredRow> top_k_dot(const EmbeddingTable& rows, std::span<const double> query,
                                 std::size_t k, std::optional<std::size_t> exclude = std::nullopt,
                                 int workers = 0);
}  // namespace omp

/// Copy of `table` with every row scaled to unit L2 norm (zero rows stay zero).
EmbeddingTable normalized_rows(const EmbeddingTable& table);

}  // namespace lexlift::kernels
