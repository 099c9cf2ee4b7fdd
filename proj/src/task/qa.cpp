#include "lexlift/task/qa.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "lexlift/error.hpp"

namespace lexlift::task {

WindowPlan plan_windows(std::size_t question_length, std::size_t context_length) {
  if (question_length == 0) throw DataError("question has no tokens");
  if (context_length == 0) throw DataError("context has no tokens");
  if (question_length >= kWindowBudget || (kWindowBudget - question_length) / 2 == 0)
    throw DataError("question exceeds window capacity (" + std::to_string(question_length) + " tokens)");

  WindowPlan plan;
  plan.question_length = question_length;
  plan.context_length = context_length;
  plan.stride = (kWindowBudget - question_length) / 2;
  const std::size_t capacity = kWindowBudget - question_length;
  const std::size_t slice = std::min(capacity, context_length);
  const std::size_t n_steps = (context_length + plan.stride - 1) / plan.stride;

  for (std::size_t n = 1; n <= n_steps; ++n) {
    WindowStep s;
    s.active_left = (n - 1) * plan.stride + 1;
    s.active_right = std::min(context_length, n * plan.stride);
    const std::size_t padding = slice - s.active_length();
    s.pad_left = padding / 2;
    s.pad_right = padding - s.pad_left;
    const std::size_t room_left = s.active_left - 1;
    const std::size_t room_right = context_length - s.active_right;
    if (s.pad_left > room_left) {
      s.pad_right += s.pad_left - room_left;
      s.pad_left = room_left;
    }
    if (s.pad_right > room_right) {
      s.pad_left += s.pad_right - room_right;
      s.pad_right = room_right;
    }
    plan.steps.push_back(s);
  }
  return plan;
}

std::vector<TokenId> assemble_window_input(std::span<const TokenId> question, std::span<const TokenId> context,
                                           const WindowPlan& plan, std::size_t step, TokenId cls, TokenId sep) {
  if (step >= plan.steps.size())
    throw DataError("window step " + std::to_string(step) + " out of range (" + std::to_string(plan.steps.size()) +
                    " steps)");
  if (question.size() != plan.question_length || context.size() != plan.context_length)
    throw DimensionError("window plan does not match the question/context lengths");
  const auto& s = plan.steps[step];
  std::vector<TokenId> input;
  input.reserve(plan.input_length(step));
  input.push_back(cls);
  input.insert(input.end(), question.begin(), question.end());
  input.push_back(sep);
  const auto slice = context.subspan(s.slice_first() - 1, s.slice_length());
  input.insert(input.end(), slice.begin(), slice.end());
  input.push_back(sep);
  return input;
}

SpanLogits concat_active(std::span<const SpanLogits> step_logits, const WindowPlan& plan) {
  if (step_logits.size() != plan.steps.size())
    throw DimensionError("got logits for " + std::to_string(step_logits.size()) + " steps, plan has " +
                         std::to_string(plan.steps.size()));
  SpanLogits h;
  h.start.reserve(plan.context_length);
  h.end.reserve(plan.context_length);
  for (std::size_t n = 0; n < plan.steps.size(); ++n) {
    const auto& logits = step_logits[n];
    const auto& s = plan.steps[n];
    const std::size_t expected = plan.input_length(n);
    if (logits.start.size() != expected || logits.end.size() != expected)
      throw DimensionError("step " + std::to_string(n) + " logits have length " + std::to_string(logits.start.size()) +
                           "/" + std::to_string(logits.end.size()) + ", input length is " + std::to_string(expected));
    const std::size_t offset = 2 + plan.question_length + s.pad_left;
    const auto first = static_cast<std::ptrdiff_t>(offset);
    const auto last = static_cast<std::ptrdiff_t>(offset + s.active_length());
    h.start.insert(h.start.end(), logits.start.begin() + first, logits.start.begin() + last);
    h.end.insert(h.end.end(), logits.end.begin() + first, logits.end.begin() + last);
  }
  return h;
}

SpanLogits word_level_logits(const SpanLogits& h, std::span<const wordpiece::WordSpan> word_spans) {
  if (h.start.size() != h.end.size()) throw DimensionError("start and end streams differ in length");
  SpanLogits o;
  o.start.reserve(word_spans.size());
  o.end.reserve(word_spans.size());
  std::size_t expect = 0;
  for (const auto& span : word_spans) {
    if (span.begin != expect || span.end <= span.begin || span.end > h.size())
      throw DataError("word spans do not partition the " + std::to_string(h.size()) + " piece positions");
    o.start.push_back(*std::max_element(h.start.begin() + static_cast<std::ptrdiff_t>(span.begin),
                                        h.start.begin() + static_cast<std::ptrdiff_t>(span.end)));
    o.end.push_back(*std::max_element(h.end.begin() + static_cast<std::ptrdiff_t>(span.begin),
                                      h.end.begin() + static_cast<std::ptrdiff_t>(span.end)));
    expect = span.end;
  }
  if (expect != h.size()) throw DataError("word spans do not cover all " + std::to_string(h.size()) + " pieces");
  return o;
}

SpanLogits pool_dual(const SpanLogits& a, const SpanLogits& b) {
  if (a.start.size() != b.start.size() || a.end.size() != b.end.size())
    throw DimensionError("cannot pool outputs of " + std::to_string(a.size()) + " and " + std::to_string(b.size()) +
                         " words");
  SpanLogits out{std::vector<double>(a.start.size()), std::vector<double>(a.end.size())};
  for (std::size_t i = 0; i < a.start.size(); ++i) out.start[i] = 0.5 * (a.start[i] + b.start[i]);
  for (std::size_t i = 0; i < a.end.size(); ++i) out.end[i] = 0.5 * (a.end[i] + b.end[i]);
  return out;
}

std::size_t span_char_length(std::span<const std::size_t> char_lengths, std::size_t first, std::size_t last) {
  std::size_t n = last - first;
  for (std::size_t i = first; i <= last; ++i) n += char_lengths[i];
  return n;
}

SpanPrediction decode_span(std::span<const double> start, std::span<const double> end,
                           std::span<const std::size_t> char_lengths, std::size_t max_chars) {
  const std::size_t n = start.size();
  if (end.size() != n || char_lengths.size() != n)
    throw DimensionError("start, end and word lengths must have equal size");

  // prefix[i] = chars of words [0, i); span (k, k') renders to
  // prefix[k'+1] - prefix[k] + (k' - k) code points.
  std::vector<std::size_t> prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + char_lengths[i];
  auto length = [&](std::size_t k, std::size_t k2) { return prefix[k2 + 1] - prefix[k] + (k2 - k); };

  std::optional<SpanPrediction> best;
  std::size_t lo = 0;  // smallest feasible start for the current end
  for (std::size_t k2 = 0; k2 < n; ++k2) {
    while (lo <= k2 && length(lo, k2) > max_chars) ++lo;
    for (std::size_t k = lo; k <= k2; ++k) {
      const double score = start[k] + end[k2];
      const bool better = !best || score > best->score ||
                          (score == best->score && (k < best->first || (k == best->first && k2 < best->last)));
      if (better) best = SpanPrediction{k, k2, score, {}};
    }
  }
  if (!best) throw DataError("no answer span fits in " + std::to_string(max_chars) + " characters");
  return *best;
}

SpanPrediction decode_span(const SpanLogits& o, std::span<const std::string> words, std::size_t max_chars) {
  std::vector<std::size_t> lengths(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) lengths[i] = corpus::utf8_length(words[i]);
  auto pred = decode_span(o.start, o.end, lengths, max_chars);
  pred.text = corpus::join({words.begin() + static_cast<std::ptrdiff_t>(pred.first),
                            words.begin() + static_cast<std::ptrdiff_t>(pred.last + 1)});
  return pred;
}

PrecomputedEncoder PrecomputedEncoder::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  PrecomputedEncoder enc;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SpanLogits logits{j.at("start").get<std::vector<double>>(), j.at("end").get<std::vector<double>>()};
      enc.add(j.at("ids").get<std::vector<TokenId>>(), std::move(logits));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const DimensionError& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return enc;
}

void PrecomputedEncoder::add(std::vector<TokenId> ids, SpanLogits logits) {
  if (logits.start.size() != ids.size() || logits.end.size() != ids.size())
    throw DimensionError("logit streams must match the input length " + std::to_string(ids.size()));
  table_.insert_or_assign(std::move(ids), std::move(logits));
}

SpanLogits PrecomputedEncoder::operator()(std::span<const TokenId> input) const {
  auto it = table_.find(std::vector<TokenId>(input.begin(), input.end()));
  if (it == table_.end())
    throw DataError("no precomputed logits for an input of length " + std::to_string(input.size()));
  return it->second;
}

namespace {

struct Prepared {
  wordpiece::TokenizationResult question;
  wordpiece::TokenizationResult context;
  WindowPlan plan;
};

Prepared prepare(const std::vector<std::string>& question_words, const std::vector<std::string>& context_words,
                 const wordpiece::Tokenizer& tokenizer, const corpus::BasicTokenizerConfig& basic) {
  Prepared p{tokenize_words(question_words, tokenizer, basic), tokenize_words(context_words, tokenizer, basic), {}};
  p.plan = plan_windows(p.question.size(), p.context.size());
  return p;
}

}  // namespace

std::vector<std::vector<TokenId>> window_inputs(const std::vector<std::string>& question_words,
                                                const std::vector<std::string>& context_words,
                                                const wordpiece::Tokenizer& tokenizer,
                                                const corpus::BasicTokenizerConfig& basic) {
  const auto p = prepare(question_words, context_words, tokenizer, basic);
  std::vector<std::vector<TokenId>> inputs;
  for (std::size_t n = 0; n < p.plan.steps.size(); ++n)
    inputs.push_back(assemble_window_input(p.question.ids, p.context.ids, p.plan, n, tokenizer.vocab().cls_id(),
                                           tokenizer.vocab().sep_id()));
  return inputs;
}

SpanLogits context_word_logits(const std::vector<std::string>& question_words,
                               const std::vector<std::string>& context_words, const wordpiece::Tokenizer& tokenizer,
                               const corpus::BasicTokenizerConfig& basic, const Encoder& encoder) {
  const auto p = prepare(question_words, context_words, tokenizer, basic);
  std::vector<SpanLogits> per_step;
  for (std::size_t n = 0; n < p.plan.steps.size(); ++n) {
    const auto input = assemble_window_input(p.question.ids, p.context.ids, p.plan, n, tokenizer.vocab().cls_id(),
                                             tokenizer.vocab().sep_id());
    per_step.push_back(encoder(input));
  }
  return word_level_logits(concat_active(per_step, p.plan), p.context.word_spans);
}

SpanPrediction answer_question(const std::string& question, const std::string& context,
                               const wordpiece::Tokenizer& standard, const wordpiece::Tokenizer* extended,
                               const corpus::BasicTokenizerConfig& basic, const Encoder& encoder) {
  const auto q_words = corpus::split_whitespace(question);
  const auto c_words = corpus::split_whitespace(context);
  auto o = context_word_logits(q_words, c_words, standard, basic, encoder);
  if (extended) o = pool_dual(o, context_word_logits(q_words, c_words, *extended, basic, encoder));
  return decode_span(o, c_words);
}

}  // namespace lexlift::task
