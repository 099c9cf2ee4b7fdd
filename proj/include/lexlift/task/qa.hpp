#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lexlift/corpus.hpp"
#include "lexlift/task/words.hpp"
#include "lexlift/wordpiece.hpp"

namespace lexlift::task {

inline constexpr std::size_t kMaxInputLength = 512;
/// [CLS], [SEP] after the question, [SEP] after the context slice.
inline constexpr std::size_t kSpecialTokenCount = 3;
inline constexpr std::size_t kWindowBudget = kMaxInputLength - kSpecialTokenCount;
inline constexpr std::size_t kMaxAnswerChars = 500;

/// One sliding-window step. Positions are 1-based over the context pieces;
/// the slice fed to the encoder is [active_left - pad_left, active_right + pad_right].
struct WindowStep {
  std::size_t active_left = 0;
  std::size_t active_right = 0;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;

  std::size_t slice_first() const noexcept { return active_left - pad_left; }
  std::size_t slice_last() const noexcept { return active_right + pad_right; }
  std::size_t slice_length() const noexcept { return slice_last() - slice_first() + 1; }
  std::size_t active_length() const noexcept { return active_right - active_left + 1; }
};

struct WindowPlan {
  std::size_t question_length = 0;
  std::size_t context_length = 0;
  std::size_t stride = 0;  // also the active width
  std::vector<WindowStep> steps;

  std::size_t input_length(std::size_t step) const { return kSpecialTokenCount + question_length + steps.at(step).slice_length(); }
};

/// stride = floor((509 - q_len) / 2); steps cover the context in stride-sized
/// active windows, each padded with surrounding context up to the 512-token
/// budget and clipped at the context ends. Throws DataError when the question
/// leaves no room for a window.
WindowPlan plan_windows(std::size_t question_length, std::size_t context_length);

/// [CLS] question [SEP] slice [SEP] for 0-based step index `step`.
std::vector<TokenId> assemble_window_input(std::span<const TokenId> question, std::span<const TokenId> context,
                                           const WindowPlan& plan, std::size_t step, TokenId cls, TokenId sep);

/// Start and end logit streams of equal length.
struct SpanLogits {
  std::vector<double> start;
  std::vector<double> end;

  std::size_t size() const noexcept { return start.size(); }
  friend bool operator==(const SpanLogits&, const SpanLogits&) = default;
};

/// Concatenates the active slices of every step into context-length streams.
/// step_logits[n] must cover the whole input of step n.
SpanLogits concat_active(std::span<const SpanLogits> step_logits, const WindowPlan& plan);

/// Per-word maximum of the piece logits, separately for start and end. The
/// spans must partition [0, h.size()) in order.
SpanLogits word_level_logits(const SpanLogits& h, std::span<const wordpiece::WordSpan> word_spans);

/// Elementwise mean of two word-level outputs of equal length.
SpanLogits pool_dual(const SpanLogits& a, const SpanLogits& b);

struct SpanPrediction {
  std::size_t first = 0;  // 0-based inclusive word range
  std::size_t last = 0;
  double score = 0.0;
  std::string text;
};

/// Rendered length in code points of words [first, last] joined by single
/// spaces, given per-word code point counts.
std::size_t span_char_length(std::span<const std::size_t> char_lengths, std::size_t first, std::size_t last);

/// Best start + end score over spans of at most `max_chars` rendered code
/// points; ties go to the smaller start, then the smaller end. Throws
/// DataError when no word fits.
SpanPrediction decode_span(std::span<const double> start, std::span<const double> end,
                           std::span<const std::size_t> char_lengths, std::size_t max_chars = kMaxAnswerChars);
SpanPrediction decode_span(const SpanLogits& o, std::span<const std::string> words,
                           std::size_t max_chars = kMaxAnswerChars);

/// Maps one encoder input to per-position start/end logits of the same length.
using Encoder = std::function<SpanLogits(std::span<const TokenId> input)>;

/// Reads JSON lines {"ids": [...], "start": [...], "end": [...]} and answers
/// requests whose ids match a stored line exactly.
class PrecomputedEncoder {
 public:
  static PrecomputedEncoder from_file(const std::filesystem::path& path);
  void add(std::vector<TokenId> ids, SpanLogits logits);
  SpanLogits operator()(std::span<const TokenId> input) const;
  std::size_t size() const noexcept { return table_.size(); }

 private:
  std::map<std::vector<TokenId>, SpanLogits> table_;
};

/// Every encoder input needed to answer one question with one tokenizer.
std::vector<std::vector<TokenId>> window_inputs(const std::vector<std::string>& question_words,
                                                const std::vector<std::string>& context_words,
                                                const wordpiece::Tokenizer& tokenizer,
                                                const corpus::BasicTokenizerConfig& basic);

/// Word-level start/end logits for the context under one tokenizer.
SpanLogits context_word_logits(const std::vector<std::string>& question_words,
                               const std::vector<std::string>& context_words, const wordpiece::Tokenizer& tokenizer,
                               const corpus::BasicTokenizerConfig& basic, const Encoder& encoder);

/// Answers with the standard tokenizer alone, or with the mean of the standard
/// and extended word-level outputs when `extended` is given.
SpanPrediction answer_question(const std::string& question, const std::string& context,
                               const wordpiece::Tokenizer& standard, const wordpiece::Tokenizer* extended,
                               const corpus::BasicTokenizerConfig& basic, const Encoder& encoder);

}  // namespace lexlift::task
