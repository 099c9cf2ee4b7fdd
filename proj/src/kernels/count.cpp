#include "lexlift/kernels/count.hpp"

#include <omp.h>

#include "lexlift/corpus.hpp"

namespace lexlift::kernels {
namespace {

void count_line(const std::string& line, TokenCounts& counts) {
  std::size_t i = 0;
  const std::string_view text(line);
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i == start) continue;
    const auto token = text.substr(start, i - start);
    if (auto it = counts.find(token); it != counts.end()) {
      ++it->second;
    } else {
      counts.emplace(std::string(token), 1);
    }
  }
}

}  // namespace

TokenCounts serial::count_tokens(const std::vector<std::string>& lines) {
  TokenCounts counts;
  for (const auto& line : lines) count_line(line, counts);
  return counts;
}

TokenCounts omp::count_tokens(const std::vector<std::string>& lines, int workers) {
  if (workers <= 0) workers = omp_get_max_threads();
  std::vector<TokenCounts> partial(static_cast<std::size_t>(workers));
  const auto n = static_cast<std::ptrdiff_t>(lines.size());
#pragma omp parallel num_threads(workers)
  {
    auto& local = partial[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) count_line(lines[static_cast<std::size_t>(i)], local);
  }
  TokenCounts merged = std::move(partial.front());
  for (std::size_t t = 1; t < partial.size(); ++t) {
    for (auto& [token, count] : partial[t]) merged[token] += count;
  }
  return merged;
}

}  // namespace lexlift::kernels
