#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lexlift::task {

struct QaExample {
  std::string id;
  std::string question;
  std::string context;
  std::vector<std::string> answers;
};

/// SQuAD-format JSON: data[].paragraphs[].{context, qas[].{id, question, answers[].text}}.
std::vector<QaExample> read_squad(const std::filesystem::path& path);

/// Lowercase, drop ASCII punctuation, drop the articles a/an/the, collapse
/// whitespace.
std::string normalize_answer(std::string_view text);

struct QaScore {
  double em = 0.0;
  double f1 = 0.0;
  double substr = 0.0;
};

/// Best score over the gold answers. substr is 1 when the normalized
/// prediction is non-empty and occurs inside some normalized gold answer.
QaScore qa_score(std::string_view prediction, std::span<const std::string> golds);

/// Dataset means in percent. Questions without a prediction score zero.
struct QaMetrics {
  double em = 0.0;
  double f1 = 0.0;
  double substr = 0.0;
  std::size_t total = 0;
  std::size_t missing = 0;
};

QaMetrics evaluate(std::span<const QaExample> examples, const std::map<std::string, std::string>& predictions);

/// {"question id": "answer text", ...}
std::map<std::string, std::string> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path, const std::map<std::string, std::string>& predictions);

}  // namespace lexlift::task
