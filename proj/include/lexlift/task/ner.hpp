#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexlift/corpus.hpp"
#include "lexlift/task/logits.hpp"
#include "lexlift/wordpiece.hpp"

namespace lexlift::task {

enum class BioTag { O, B, I };

struct EntityLabel {
  BioTag tag = BioTag::O;
  std::string type;  // empty for O

  /// "O", "B-Disease", "I-Chemical", ... A bare "B" or "I" has an empty type.
  static EntityLabel parse(std::string_view text);
  std::string str() const;
  friend bool operator==(const EntityLabel&, const EntityLabel&) = default;
};

struct LabeledSentence {
  std::vector<std::string> words;
  std::vector<EntityLabel> labels;

  std::size_t size() const noexcept { return words.size(); }
  /// Throws DataError on length mismatch or an I that does not continue a
  /// B or I of the same type.
  void validate() const;
  friend bool operator==(const LabeledSentence&, const LabeledSentence&) = default;
};

/// Half-open word range of one labeled entity.
struct EntitySpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};
std::vector<EntitySpan> entity_spans(const LabeledSentence& sentence);

inline constexpr std::size_t kMaxChunkWords = 30;

/// Greedy left-to-right chunking. A labeled span that would straddle a chunk
/// boundary moves whole into the next chunk. Throws DataError when a single
/// span is longer than `max_words`.
std::vector<LabeledSentence> chunk_sentence(const LabeledSentence& sentence, std::size_t max_words = kMaxChunkWords);

inline constexpr int kIgnoreLabel = -100;

/// Label string <-> id. "O" is 0, then B-/I- pairs per entity type in
/// lexicographic type order.
class LabelSet {
 public:
  static LabelSet from_sentences(std::span<const LabeledSentence> sentences);
  static LabelSet from_names(std::vector<std::string> names);

  int id(const EntityLabel& label) const;
  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, int, std::less<>> ids_;
};

struct NerExample {
  std::vector<TokenId> ids;
  std::vector<int> labels;
  std::vector<bool> word_initial;
};

/// [CLS] pieces [SEP]. Word-initial pieces carry the word's label id;
/// continuation pieces and the specials carry kIgnoreLabel.
NerExample encode_ner(const LabeledSentence& chunk, const wordpiece::TokenizationResult& tokens,
                      const wordpiece::WordpieceVocab& vocab, const LabelSet& labels);

/// Two or more whitespace-separated columns, token first and tag last; blank
/// lines end a sentence and -DOCSTART- lines are skipped.
std::vector<LabeledSentence> read_conll(const std::filesystem::path& path);

/// Chunks every sentence and encodes chunk i with the standard tokenizer when
/// i is even and with the extended one when i is odd. Each word is
/// basic-tokenized before wordpiece splitting and keeps a single label.
std::vector<NerExample> encode_ner_dataset(std::span<const LabeledSentence> sentences,
                                           const wordpiece::Tokenizer& standard,
                                           const wordpiece::Tokenizer& extended, const LabelSet& labels,
                                           const corpus::BasicTokenizerConfig& basic = {});

/// JSON lines {ids, labels, word_initial}.
void write_ner_jsonl(const std::filesystem::path& path, std::span<const NerExample> examples);

/// Keeps the rows of `logits` whose mask entry is true.
Logits gather_word_initial(const Logits& logits, const std::vector<bool>& word_initial);

/// Elementwise mean of two equally shaped outputs.
Logits pool_dual(const Logits& a, const Logits& b);

}  // namespace lexlift::task
