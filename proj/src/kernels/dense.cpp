#include "lexlift/kernels/dense.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

#include "lexlift/error.hpp"

namespace lexlift::kernels {
namespace {

void check_map(const MatrixView& map, const EmbeddingTable& src) {
  if (map.cols != src.dim()) {
    throw DimensionError("map expects input dim " + std::to_string(map.cols) + " but rows have dim " +
                         std::to_string(src.dim()));
  }
  if (map.values.size() != map.rows * map.cols) throw DimensionError("map view size mismatch");
}

void project_one(const MatrixView& map, std::span<const float> in, std::span<float> out) {
  for (std::size_t r = 0; r < map.rows; ++r) {
    const double* w = map.values.data() + r * map.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < map.cols; ++c) acc += w[c] * static_cast<double>(in[c]);
    out[r] = static_cast<float>(acc);
  }
}

double dot(std::span<const float> row, std::span<const double> query) {
  double acc = 0.0;
  for (std::size_t c = 0; c < row.size(); ++c) acc += static_cast<double>(row[c]) * query[c];
  return acc;
}

bool better(const ScoredRow& a, const ScoredRow& b) {
  return a.score > b.score || (a.score == b.score && a.row < b.row);
}

// Keeps the k best rows in a bounded min-heap ordered by `better`.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) {}
  void offer(const ScoredRow& cand) {
    if (k_ == 0) return;
    if (heap_.size() < k_) {
      heap_.push_back(cand);
      std::push_heap(heap_.begin(), heap_.end(), better);
    } else if (better(cand, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), better);
      heap_.back() = cand;
      std::push_heap(heap_.begin(), heap_.end(), better);
    }
  }
  std::vector<ScoredRow> sorted() && {
    std::sort(heap_.begin(), heap_.end(), better);
    return std::move(heap_);
  }
  const std::vector<ScoredRow>& items() const { return heap_; }

 private:
  std::size_t k_;
  std::vector<ScoredRow> heap_;
};

void check_query(const EmbeddingTable& rows, std::span<const double> query) {
  if (query.size() != rows.dim()) {
    throw DimensionError("query dim " + std::to_string(query.size()) + " does not match rows dim " +
                         std::to_string(rows.dim()));
  }
}

}  // namespace

EmbeddingTable serial::project_rows(const MatrixView& map, const EmbeddingTable& src) {
  check_map(map, src);
  EmbeddingTable out(src.rows(), map.rows);
  for (std::size_t i = 0; i < src.rows(); ++i) project_one(map, src.row(i), out.row(i));
  return out;
}

EmbeddingTable omp::project_rows(const MatrixView& map, const EmbeddingTable& src, int workers) {
  check_map(map, src);
  if (workers <= 0) workers = omp_get_max_threads();
  EmbeddingTable out(src.rows(), map.rows);
  const auto n = static_cast<std::ptrdiff_t>(src.rows());
#pragma omp parallel for num_threads(workers) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    project_one(map, src.row(static_cast<std::size_t>(i)), out.row(static_cast<std::size_t>(i)));
  }
  return out;
}

std::vector<ScoredRow> serial::top_k_dot(const EmbeddingTable& rows, std::span<const double> query,
                                         std::size_t k, std::optional<std::size_t> exclude) {
  check_query(rows, query);
  TopK best(k);
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    if (exclude && *exclude == i) continue;
    best.offer({i, dot(rows.row(i), query)});
  }
  return std::move(best).sorted();
}

std::vector<ScoredRow> omp::top_k_dot(const EmbeddingTable& rows, std::span<const double> query,
                                      std::size_t k, std::optional<std::size_t> exclude, int workers) {
  check_query(rows, query);
  if (workers <= 0) workers = omp_get_max_threads();
  std::vector<TopK> partial(static_cast<std::size_t>(workers), TopK(k));
  const auto n = static_cast<std::ptrdiff_t>(rows.rows());
#pragma omp parallel num_threads(workers)
  {
    auto& local = partial[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto row = static_cast<std::size_t>(i);
      if (exclude && *exclude == row) continue;
      local.offer({row, dot(rows.row(row), query)});
    }
  }
  TopK merged(k);
  for (const auto& p : partial) {
    for (const auto& item : p.items()) merged.offer(item);
  }
  return std::move(merged).sorted();
}

EmbeddingTable normalized_rows(const EmbeddingTable& table) {
  EmbeddingTable out = table;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    double norm = 0.0;
    for (float v : row) norm += static_cast<double>(v) * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (float& v : row) v = static_cast<float>(v / norm);
    }
  }
  return out;
}

}  // namespace lexlift::kernels
