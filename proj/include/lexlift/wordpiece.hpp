#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexlift/vocab.hpp"

namespace lexlift::wordpiece {

inline constexpr std::string_view kContinuationPrefix = "##";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kMaskToken = "[MASK]";

/// Words longer than this many code points tokenize to [UNK].
inline constexpr std::size_t kMaxInputCharsPerWord = 100;

bool is_continuation(std::string_view piece) noexcept;

/// Wordpiece vocabulary (line index = id) with the BERT special tokens.
class WordpieceVocab {
 public:
  /// Throws DataError when a special token is missing or a token repeats.
  explicit WordpieceVocab(Vocab entries);
  static WordpieceVocab from_file(const std::filesystem::path& path);

  const Vocab& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::optional<TokenId> find(std::string_view piece) const { return entries_.find(piece); }
  const std::string& token(TokenId id) const { return entries_.token(id); }

  /// True for entries that stand for a whole word, i.e. non-continuation
  /// pieces.
  bool is_whole_word(std::string_view word) const;

  TokenId unk_id() const noexcept { return unk_; }
  TokenId cls_id() const noexcept { return cls_; }
  TokenId sep_id() const noexcept { return sep_; }
  TokenId pad_id() const noexcept { return pad_; }
  TokenId mask_id() const noexcept { return mask_; }

  friend bool operator==(const WordpieceVocab& a, const WordpieceVocab& b) { return a.entries_ == b.entries_; }

 private:
  Vocab entries_;
  TokenId unk_ = 0, cls_ = 0, sep_ = 0, pad_ = 0, mask_ = 0;
};

/// Half-open piece range [begin, end) of one input word.
struct WordSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const WordSpan&, const WordSpan&) = default;
};

struct TokenizationResult {
  std::vector<std::string> pieces;
  std::vector<TokenId> ids;
  std::vector<bool> word_initial;
  std::vector<WordSpan> word_spans;

  std::size_t size() const noexcept { return pieces.size(); }
  std::size_t word_count() const noexcept { return word_spans.size(); }
};

/// Greedy longest-match-first split of one word.
std::vector<std::string> wordpiece_tokenize(std::string_view word, const WordpieceVocab& vocab);

TokenizationResult tokenize_standard(std::span<const std::string> words, const WordpieceVocab& vocab);

/// Words that are whole-word vocabulary entries or members of `added` become
/// single pieces; everything else is tokenized as usual. Added token t gets id
/// vocab.size() + added.find(t).
TokenizationResult tokenize_extended(std::span<const std::string> words, const WordpieceVocab& vocab,
                                     const Vocab& added);

/// Strips continuation prefixes and concatenates. Throws DataError on [UNK].
std::string detokenize(std::span<const std::string> pieces);

enum class Mode { standard, extended };

/// Binds a vocabulary (and optional added tokens) to one tokenization mode.
class Tokenizer {
 public:
  explicit Tokenizer(const WordpieceVocab& vocab) : vocab_(&vocab) {}
  Tokenizer(const WordpieceVocab& vocab, const Vocab& added) : vocab_(&vocab), added_(&added), mode_(Mode::extended) {}

  Mode mode() const noexcept { return mode_; }
  const WordpieceVocab& vocab() const noexcept { return *vocab_; }

  TokenizationResult operator()(std::span<const std::string> words) const {
    return mode_ == Mode::extended ? tokenize_extended(words, *vocab_, *added_) : tokenize_standard(words, *vocab_);
  }

 private:
  const WordpieceVocab* vocab_;
  const Vocab* added_ = nullptr;
  Mode mode_ = Mode::standard;
};

}  // namespace lexlift::wordpiece
