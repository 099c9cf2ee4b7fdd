#include "lexlift/task/ner.hpp"

#include <fstream>
#include <set>

#include "json.hpp"
#include "lexlift/corpus.hpp"
#include "lexlift/error.hpp"
#include "lexlift/task/words.hpp"

namespace lexlift::task {

EntityLabel EntityLabel::parse(std::string_view text) {
  if (text == "O") return {};
  if (text.size() >= 1 && (text[0] == 'B' || text[0] == 'I') && (text.size() == 1 || text[1] == '-')) {
    EntityLabel label{text[0] == 'B' ? BioTag::B : BioTag::I, {}};
    if (text.size() > 2) label.type = std::string(text.substr(2));
    return label;
  }
  throw DataError("invalid BIO tag '" + std::string(text) + "'");
}

std::string EntityLabel::str() const {
  if (tag == BioTag::O) return "O";
  std::string out = tag == BioTag::B ? "B" : "I";
  if (!type.empty()) (out += '-') += type;
  return out;
}

void LabeledSentence::validate() const {
  if (words.size() != labels.size())
    throw DataError("sentence has " + std::to_string(words.size()) + " words but " + std::to_string(labels.size()) +
                    " labels");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].tag != BioTag::I) continue;
    if (i == 0 || labels[i - 1].tag == BioTag::O || labels[i - 1].type != labels[i].type)
      throw DataError("tag " + labels[i].str() + " on word " + std::to_string(i + 1) + " ('" + words[i] +
                      "') does not continue an entity");
  }
}

std::vector<EntitySpan> entity_spans(const LabeledSentence& sentence) {
  std::vector<EntitySpan> spans;
  const auto& labels = sentence.labels;
  for (std::size_t i = 0; i < labels.size();) {
    if (labels[i].tag == BioTag::O) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < labels.size() && labels[j].tag == BioTag::I && labels[j].type == labels[i].type) ++j;
    spans.push_back({i, j});
    i = j;
  }
  return spans;
}

std::vector<LabeledSentence> chunk_sentence(const LabeledSentence& sentence, std::size_t max_words) {
  if (max_words == 0) throw ConfigError("chunk size must be positive");
  sentence.validate();

  // Units are single O words or whole entity spans.
  std::vector<EntitySpan> units;
  {
    const auto spans = entity_spans(sentence);
    std::size_t next = 0;
    for (std::size_t i = 0; i < sentence.size();) {
      if (next < spans.size() && spans[next].begin == i) {
        units.push_back(spans[next]);
        i = spans[next++].end;
      } else {
        units.push_back({i, i + 1});
        ++i;
      }
    }
  }

  std::vector<LabeledSentence> chunks;
  std::size_t chunk_begin = 0;
  auto flush = [&](std::size_t end) {
    LabeledSentence chunk;
    chunk.words.assign(sentence.words.begin() + static_cast<std::ptrdiff_t>(chunk_begin),
                       sentence.words.begin() + static_cast<std::ptrdiff_t>(end));
    chunk.labels.assign(sentence.labels.begin() + static_cast<std::ptrdiff_t>(chunk_begin),
                        sentence.labels.begin() + static_cast<std::ptrdiff_t>(end));
    chunks.push_back(std::move(chunk));
    chunk_begin = end;
  };
  for (const auto& unit : units) {
    if (unit.end - unit.begin > max_words) {
      std::vector<std::string> words(sentence.words.begin() + static_cast<std::ptrdiff_t>(unit.begin),
                                     sentence.words.begin() + static_cast<std::ptrdiff_t>(unit.end));
      throw DataError("labeled span of " + std::to_string(unit.end - unit.begin) + " words at word " +
                      std::to_string(unit.begin + 1) + " exceeds the chunk limit of " + std::to_string(max_words) +
                      ": '" + corpus::join(words) + "'");
    }
    if (unit.end - chunk_begin > max_words) flush(unit.begin);
  }
  if (chunk_begin < sentence.size() || chunks.empty()) flush(sentence.size());
  return chunks;
}

LabelSet LabelSet::from_names(std::vector<std::string> names) {
  LabelSet set;
  for (auto& name : names) {
    EntityLabel::parse(name);
    const int id = static_cast<int>(set.names_.size());
    if (!set.ids_.emplace(name, id).second) throw DataError("duplicate label '" + name + "'");
    set.names_.push_back(std::move(name));
  }
  return set;
}

LabelSet LabelSet::from_sentences(std::span<const LabeledSentence> sentences) {
  std::set<std::string> types;
  for (const auto& s : sentences)
    for (const auto& l : s.labels)
      if (l.tag != BioTag::O) types.insert(l.type);
  std::vector<std::string> names{"O"};
  for (const auto& t : types) {
    names.push_back(EntityLabel{BioTag::B, t}.str());
    names.push_back(EntityLabel{BioTag::I, t}.str());
  }
  return from_names(std::move(names));
}

int LabelSet::id(const EntityLabel& label) const {
  auto it = ids_.find(label.str());
  if (it == ids_.end()) throw DataError("label '" + label.str() + "' is not in the label set");
  return it->second;
}

NerExample encode_ner(const LabeledSentence& chunk, const wordpiece::TokenizationResult& tokens,
                      const wordpiece::WordpieceVocab& vocab, const LabelSet& labels) {
  if (tokens.word_count() != chunk.size())
    throw DataError("tokenization covers " + std::to_string(tokens.word_count()) + " words, chunk has " +
                    std::to_string(chunk.size()));
  NerExample ex;
  ex.ids.reserve(tokens.size() + 2);
  ex.ids.push_back(vocab.cls_id());
  ex.labels.push_back(kIgnoreLabel);
  ex.word_initial.push_back(false);
  for (std::size_t w = 0; w < tokens.word_count(); ++w) {
    const auto span = tokens.word_spans[w];
    for (std::size_t p = span.begin; p < span.end; ++p) {
      ex.ids.push_back(tokens.ids[p]);
      ex.labels.push_back(p == span.begin ? labels.id(chunk.labels[w]) : kIgnoreLabel);
      ex.word_initial.push_back(p == span.begin);
    }
  }
  ex.ids.push_back(vocab.sep_id());
  ex.labels.push_back(kIgnoreLabel);
  ex.word_initial.push_back(false);
  return ex;
}

std::vector<LabeledSentence> read_conll(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<LabeledSentence> out;
  LabeledSentence current;
  std::string line;
  std::size_t line_no = 0;
  auto finish = [&] {
    if (current.words.empty()) return;
    try {
      current.validate();
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(std::move(current));
    current = {};
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cols = corpus::split_whitespace(line);
    if (cols.empty()) {
      finish();
      continue;
    }
    if (cols.front() == "-DOCSTART-") continue;
    if (cols.size() < 2) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected token and tag");
    current.words.push_back(cols.front());
    try {
      current.labels.push_back(EntityLabel::parse(cols.back()));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  finish();
  return out;
}

std::vector<NerExample> encode_ner_dataset(std::span<const LabeledSentence> sentences,
                                           const wordpiece::Tokenizer& standard,
                                           const wordpiece::Tokenizer& extended, const LabelSet& labels,
                                           const corpus::BasicTokenizerConfig& basic) {
  std::vector<NerExample> out;
  for (const auto& sentence : sentences) {
    for (const auto& chunk : chunk_sentence(sentence)) {
      const auto& tok = out.size() % 2 == 0 ? standard : extended;
      out.push_back(encode_ner(chunk, tokenize_words(chunk.words, tok, basic), tok.vocab(), labels));
    }
  }
  return out;
}

void write_ner_jsonl(const std::filesystem::path& path, std::span<const NerExample> examples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& ex : examples) {
    nlohmann::json j = {{"ids", ex.ids}, {"labels", ex.labels}, {"word_initial", ex.word_initial}};
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Logits gather_word_initial(const Logits& logits, const std::vector<bool>& word_initial) {
  if (logits.rows != word_initial.size())
    throw DimensionError("logits have " + std::to_string(logits.rows) + " rows, mask has " +
                         std::to_string(word_initial.size()) + " entries");
  Logits out;
  out.cols = logits.cols;
  for (std::size_t i = 0; i < logits.rows; ++i) {
    if (!word_initial[i]) continue;
    const auto r = logits.row(i);
    out.values.insert(out.values.end(), r.begin(), r.end());
    ++out.rows;
  }
  return out;
}

Logits pool_dual(const Logits& a, const Logits& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw DimensionError("cannot pool " + std::to_string(a.rows) + "x" + std::to_string(a.cols) + " with " +
                         std::to_string(b.rows) + "x" + std::to_string(b.cols));
  Logits out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = 0.5 * (a.values[i] + b.values[i]);
  return out;
}

}  // namespace lexlift::task
