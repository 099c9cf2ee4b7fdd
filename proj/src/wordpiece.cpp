#include "lexlift/wordpiece.hpp"

#include "lexlift/error.hpp"

namespace lexlift::wordpiece {
namespace {

TokenId require(const Vocab& entries, std::string_view token) {
  auto id = entries.find(token);
  if (!id) throw DataError("wordpiece vocabulary lacks special token " + std::string(token));
  return *id;
}

// Byte offsets of every UTF-8 code point start, plus the end offset.
std::vector<std::size_t> code_point_offsets(std::string_view word) {
  std::vector<std::size_t> offsets;
  offsets.reserve(word.size() + 1);
  for (std::size_t i = 0; i < word.size(); ++i) {
    if ((static_cast<unsigned char>(word[i]) & 0xC0) != 0x80) offsets.push_back(i);
  }
  offsets.push_back(word.size());
  return offsets;
}

void append_word(TokenizationResult& out, const std::vector<std::string>& pieces, const WordpieceVocab& vocab) {
  const std::size_t begin = out.pieces.size();
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    out.ids.push_back(vocab.find(pieces[i]).value_or(vocab.unk_id()));
    out.word_initial.push_back(i == 0);
    out.pieces.push_back(pieces[i]);
  }
  out.word_spans.push_back({begin, out.pieces.size()});
}

}  // namespace

bool is_continuation(std::string_view piece) noexcept { return piece.starts_with(kContinuationPrefix); }

WordpieceVocab::WordpieceVocab(Vocab entries) : entries_(std::move(entries)) {
  unk_ = require(entries_, kUnkToken);
  cls_ = require(entries_, kClsToken);
  sep_ = require(entries_, kSepToken);
  pad_ = require(entries_, kPadToken);
  mask_ = require(entries_, kMaskToken);
}

WordpieceVocab WordpieceVocab::from_file(const std::filesystem::path& path) {
  try {
    return WordpieceVocab(read_vocab_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

bool WordpieceVocab::is_whole_word(std::string_view word) const {
  return !is_continuation(word) && entries_.contains(word);
}

std::vector<std::string> wordpiece_tokenize(std::string_view word, const WordpieceVocab& vocab) {
  const auto offsets = code_point_offsets(word);
  const std::size_t chars = offsets.size() - 1;
  if (chars == 0 || chars > kMaxInputCharsPerWord) return {std::string(kUnkToken)};

  std::vector<std::string> pieces;
  std::string candidate;
  std::size_t start = 0;
  while (start < chars) {
    std::size_t end = chars;
    bool matched = false;
    while (start < end) {
      candidate.clear();
      if (start > 0) candidate.append(kContinuationPrefix);
      candidate.append(word.substr(offsets[start], offsets[end] - offsets[start]));
      if (vocab.find(candidate)) {
        matched = true;
        break;
      }
      --end;
    }
    if (!matched) return {std::string(kUnkToken)};
    pieces.push_back(candidate);
    start = end;
  }
  return pieces;
}

TokenizationResult tokenize_standard(std::span<const std::string> words, const WordpieceVocab& vocab) {
  TokenizationResult out;
  for (const auto& word : words) append_word(out, wordpiece_tokenize(word, vocab), vocab);
  return out;
}

TokenizationResult tokenize_extended(std::span<const std::string> words, const WordpieceVocab& vocab,
                                     const Vocab& added) {
  TokenizationResult out;
  const auto base = static_cast<TokenId>(vocab.size());
  for (const auto& word : words) {
    if (vocab.is_whole_word(word)) {
      // An existing whole-word entry wins over a colliding added token.
      out.word_spans.push_back({out.pieces.size(), out.pieces.size() + 1});
      out.pieces.push_back(word);
      out.ids.push_back(*vocab.find(word));
      out.word_initial.push_back(true);
    } else if (auto id = added.find(word)) {
      out.word_spans.push_back({out.pieces.size(), out.pieces.size() + 1});
      out.pieces.push_back(word);
      out.ids.push_back(base + *id);
      out.word_initial.push_back(true);
    } else {
      append_word(out, wordpiece_tokenize(word, vocab), vocab);
    }
  }
  return out;
}

std::string detokenize(std::span<const std::string> pieces) {
  std::string word;
  for (const auto& piece : pieces) {
    if (piece == kUnkToken) throw DataError("cannot detokenize a sequence containing " + std::string(kUnkToken));
    word.append(is_continuation(piece) ? std::string_view(piece).substr(kContinuationPrefix.size())
                                       : std::string_view(piece));
  }
  return word;
}

}  // namespace lexlift::wordpiece
