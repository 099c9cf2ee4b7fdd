#include "lexlift/task/squad.hpp"

#include <unicode/locid.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include "json.hpp"
#include "lexlift/error.hpp"

namespace lexlift::task {
namespace {

bool is_ascii_punct(UChar32 c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
}

// Regex \w over str in Python: letters, numbers and underscore.
bool is_word_char(UChar32 c) {
  if (c == '_' || u_isalpha(c)) return true;
  const auto t = u_charType(c);
  return t == U_DECIMAL_DIGIT_NUMBER || t == U_LETTER_NUMBER || t == U_OTHER_NUMBER;
}

// str.isspace() in Python.
bool is_space(UChar32 c) {
  if ((c >= 0x09 && c <= 0x0D) || (c >= 0x1C && c <= 0x1F) || c == 0x85) return true;
  const auto t = u_charType(c);
  return t == U_SPACE_SEPARATOR || t == U_LINE_SEPARATOR || t == U_PARAGRAPH_SEPARATOR;
}

bool is_article(const std::u32string& run) { return run == U"a" || run == U"an" || run == U"the"; }

std::vector<std::string> tokens(std::string_view normalized) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < normalized.size()) {
    const auto j = normalized.find(' ', i);
    const auto stop = j == std::string_view::npos ? normalized.size() : j;
    if (stop > i) out.emplace_back(normalized.substr(i, stop - i));
    i = stop + 1;
  }
  return out;
}

double token_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  std::unordered_map<std::string, long> counts;
  for (const auto& t : gold) ++counts[t];
  long common = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(common) / static_cast<double>(gold.size());
  return 2 * precision * recall / (precision + recall);
}

}  // namespace

std::string normalize_answer(std::string_view text) {
  auto lower = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  lower.toLower(icu::Locale::getRoot());

  std::u32string chars;
  for (int32_t i = 0; i < lower.length();) {
    const UChar32 c = lower.char32At(i);
    i += U16_LENGTH(c);
    if (!is_ascii_punct(c)) chars.push_back(c);
  }

  // Articles are replaced by a space when they form a whole \w run.
  std::u32string stripped;
  for (std::size_t i = 0; i < chars.size();) {
    if (!is_word_char(chars[i])) {
      stripped.push_back(chars[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < chars.size() && is_word_char(chars[j])) ++j;
    std::u32string run = chars.substr(i, j - i);
    if (is_article(run)) {
      stripped.push_back(U' ');
    } else {
      stripped += run;
    }
    i = j;
  }

  icu::UnicodeString out;
  bool pending_space = false;
  for (const char32_t c : stripped) {
    if (is_space(static_cast<UChar32>(c))) {
      pending_space = out.length() > 0;
      continue;
    }
    if (pending_space) out.append(static_cast<UChar32>(' '));
    pending_space = false;
    out.append(static_cast<UChar32>(c));
  }
  std::string result;
  out.toUTF8String(result);
  return result;
}

QaScore qa_score(std::string_view prediction, std::span<const std::string> golds) {
  if (golds.empty()) throw DataError("qa_score needs at least one gold answer");
  const auto pred = normalize_answer(prediction);
  const auto pred_tokens = tokens(pred);
  QaScore best;
  for (const auto& gold : golds) {
    const auto g = normalize_answer(gold);
    best.em = std::max(best.em, pred == g ? 1.0 : 0.0);
    best.f1 = std::max(best.f1, token_f1(pred_tokens, tokens(g)));
    if (!pred.empty() && g.find(pred) != std::string::npos) best.substr = 1.0;
  }
  return best;
}

QaMetrics evaluate(std::span<const QaExample> examples, const std::map<std::string, std::string>& predictions) {
  QaMetrics m;
  for (const auto& ex : examples) {
    ++m.total;
    auto it = predictions.find(ex.id);
    if (it == predictions.end()) {
      ++m.missing;
      continue;
    }
    const auto s = qa_score(it->second, ex.answers);
    m.em += s.em;
    m.f1 += s.f1;
    m.substr += s.substr;
  }
  if (m.total > 0) {
    const double scale = 100.0 / static_cast<double>(m.total);
    m.em *= scale;
    m.f1 *= scale;
    m.substr *= scale;
  }
  return m;
}

std::vector<QaExample> read_squad(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<QaExample> out;
  try {
    const auto root = nlohmann::json::parse(in);
    for (const auto& article : root.at("data")) {
      for (const auto& para : article.at("paragraphs")) {
        const auto context = para.at("context").get<std::string>();
        for (const auto& qa : para.at("qas")) {
          QaExample ex;
          const auto& id = qa.at("id");
          ex.id = id.is_string() ? id.get<std::string>() : id.dump();
          ex.question = qa.at("question").get<std::string>();
          ex.context = context;
          for (const auto& a : qa.value("answers", nlohmann::json::array())) ex.answers.push_back(a.at("text").get<std::string>());
          if (ex.answers.empty()) throw DataError("question " + ex.id + " has no answers");
          out.push_back(std::move(ex));
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return out;
}

std::map<std::string, std::string> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in).get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_predictions(const std::filesystem::path& path, const std::map<std::string, std::string>& predictions) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << nlohmann::json(predictions).dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace lexlift::task
