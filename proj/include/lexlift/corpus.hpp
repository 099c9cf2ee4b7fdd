#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace lexlift::corpus {

enum class Compression { plain, gzip };

/// Pre-extracted UTF-8 text, one document or sentence per line.
struct CorpusSource {
  std::vector<std::filesystem::path> paths;
  Compression format = Compression::plain;

  /// Detects gzip from the file magic of the first path.
  static CorpusSource from_paths(std::vector<std::filesystem::path> paths);

  /// Throws IoError naming the first path that is missing or unreadable.
  void validate() const;
};

/// Expands a shell glob (or a comma-separated list of globs) into sorted paths.
/// A pattern without wildcards is returned as-is even if it does not exist, so
/// that validation reports the missing path.
std::vector<std::filesystem::path> expand_glob(std::string_view patterns);

/// Streams the non-empty lines of every file in order. Plain and gzip files are
/// both read through zlib, which passes uncompressed data through unchanged.
class LineReader {
 public:
  explicit LineReader(CorpusSource source);
  ~LineReader();
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  /// Returns false once every file is exhausted.
  bool next(std::string& line);

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// Convenience wrapper over LineReader.
std::vector<std::string> read_lines(const CorpusSource& source);

struct BasicTokenizerConfig {
  bool lower_case = false;
  bool strip_accents = false;
  bool isolate_cjk = true;

  bool strips_accents() const noexcept { return strip_accents || lower_case; }
};

/// Rule-based word tokenizer applied before wordpiece tokenization: drops
/// control characters, splits on whitespace, isolates punctuation and CJK
/// ideographs, and optionally lowercases and strips combining accents.
std::vector<std::string> basic_tokenize(std::string_view text, const BasicTokenizerConfig& config);

std::vector<std::string> split_whitespace(std::string_view text);

std::string join(const std::vector<std::string>& words, std::string_view sep = " ");

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view text) noexcept;

}  // namespace lexlift::corpus
