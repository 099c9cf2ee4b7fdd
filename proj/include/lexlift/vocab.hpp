#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lexlift {

using TokenId = std::int32_t;

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};

using TokenCounts =
    std::unordered_map<std::string, std::uint64_t, StringHash, std::equal_to<>>;

/// Ordered token -> id map with per-token corpus counts.
///
/// Ids are contiguous from 0 in insertion order. Serves as both the Word2Vec
/// vocabulary (counts meaningful) and the backing store of a wordpiece
/// vocabulary (counts zero).
class Vocab {
 public:
  Vocab() = default;

  /// Sorts by count descending, ties by token ascending, so that id order is
  /// deterministic for any input order.
  static Vocab from_counts(const TokenCounts& counts, std::uint64_t min_count);
  static Vocab from_tokens(std::vector<std::string> tokens);

  /// Throws DataError on duplicates.
  TokenId push_back(std::string token, std::uint64_t count = 0);

  std::optional<TokenId> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::uint64_t count(TokenId id) const { return counts_.at(static_cast<std::size_t>(id)); }

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t total_count() const noexcept;

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.tokens_ == b.tokens_ && a.counts_ == b.counts_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, TokenId, StringHash, std::equal_to<>> ids_;
};

/// One token per line, line index = id. Trailing '\r' is stripped.
Vocab read_vocab_file(const std::filesystem::path& path);
void write_vocab_file(const std::filesystem::path& path, const Vocab& vocab);

/// Counts whitespace-separated tokens over pre-tokenized lines and keeps those
/// with frequency >= min_count. Throws ConfigError when nothing survives.
Vocab build_vocab(const std::vector<std::string>& lines, std::uint64_t min_count,
                  int workers = 1);

}  // namespace lexlift
