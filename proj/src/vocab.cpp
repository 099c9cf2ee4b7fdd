#include "lexlift/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "lexlift/error.hpp"
#include "lexlift/kernels/count.hpp"

namespace lexlift {

Vocab Vocab::from_counts(const TokenCounts& counts, std::uint64_t min_count) {
  std::vector<std::pair<std::string_view, std::uint64_t>> kept;
  kept.reserve(counts.size());
  for (const auto& [token, count] : counts) {
    if (count >= min_count) kept.emplace_back(token, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab vocab;
  vocab.tokens_.reserve(kept.size());
  vocab.counts_.reserve(kept.size());
  vocab.ids_.reserve(kept.size());
  for (const auto& [token, count] : kept) vocab.push_back(std::string(token), count);
  return vocab;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab vocab;
  vocab.tokens_.reserve(tokens.size());
  vocab.counts_.reserve(tokens.size());
  vocab.ids_.reserve(tokens.size());
  for (auto& token : tokens) vocab.push_back(std::move(token), 0);
  return vocab;
}

TokenId Vocab::push_back(std::string token, std::uint64_t count) {
  const auto id = static_cast<TokenId>(tokens_.size());
  auto [it, inserted] = ids_.try_emplace(token, id);
  if (!inserted) throw DataError("duplicate vocabulary token '" + token + "'");
  tokens_.push_back(std::move(token));
  counts_.push_back(count);
  return id;
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Vocab::total_count() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

Vocab read_vocab_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(std::move(line));
  }
  if (in.bad()) throw IoError("error reading vocabulary file " + path.string());
  try {
    return Vocab::from_tokens(std::move(tokens));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_vocab_file(const std::filesystem::path& path, const Vocab& vocab) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write vocabulary file " + path.string());
  for (const auto& token : vocab.tokens()) out << token << '\n';
  if (!out) throw IoError("error writing vocabulary file " + path.string());
}

Vocab build_vocab(const std::vector<std::string>& lines, std::uint64_t min_count, int workers) {
  const TokenCounts counts = workers > 1 ? kernels::omp::count_tokens(lines, workers)
                                         : kernels::serial::count_tokens(lines);
  Vocab vocab = Vocab::from_counts(counts, min_count);
  if (vocab.empty()) {
    throw ConfigError("vocabulary is empty after applying min_count=" + std::to_string(min_count));
  }
  return vocab;
}

}  // namespace lexlift
