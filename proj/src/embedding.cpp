#include "lexlift/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "lexlift/error.hpp"

namespace lexlift {

EmbeddingTable::EmbeddingTable(std::size_t rows, std::size_t dim, std::vector<float> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (data_.size() != rows_ * dim_) {
    throw DimensionError("embedding data has " + std::to_string(data_.size()) +
                         " values, expected " + std::to_string(rows_ * dim_));
  }
}

void EmbeddingTable::append_row(std::span<const float> values) {
  if (values.size() != dim_) {
    throw DimensionError("row of length " + std::to_string(values.size()) +
                         " appended to table of dim " + std::to_string(dim_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

bool EmbeddingTable::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) noexcept {
  return a.rows_ == b.rows_ && a.dim_ == b.dim_ &&
         (a.data_.empty() ||
          std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0);
}

}  // namespace lexlift
