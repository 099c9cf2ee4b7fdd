#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lexlift {

/// Dense row-major float32 matrix of d-dimensional vectors keyed by token id.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim, 0.0f) {}
  EmbeddingTable(std::size_t rows, std::size_t dim, std::vector<float> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<float> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  void append_row(std::span<const float> values);

  bool all_finite() const noexcept;

  // Bitwise comparison: two tables are equal only if every float has the same
  // bit pattern.
  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

}  // namespace lexlift
