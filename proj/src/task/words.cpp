#include "lexlift/task/words.hpp"

namespace lexlift::task {

wordpiece::TokenizationResult tokenize_words(std::span<const std::string> words, const wordpiece::Tokenizer& tokenizer,
                                             const corpus::BasicTokenizerConfig& basic) {
  wordpiece::TokenizationResult out;
  for (const auto& word : words) {
    auto sub = corpus::basic_tokenize(word, basic);
    const std::size_t begin = out.pieces.size();
    if (sub.empty()) {
      out.pieces.emplace_back(wordpiece::kUnkToken);
      out.ids.push_back(tokenizer.vocab().unk_id());
      out.word_initial.push_back(true);
    } else {
      auto part = tokenizer(sub);
      out.pieces.insert(out.pieces.end(), part.pieces.begin(), part.pieces.end());
      out.ids.insert(out.ids.end(), part.ids.begin(), part.ids.end());
      for (std::size_t i = 0; i < part.size(); ++i) out.word_initial.push_back(i == 0);
    }
    out.word_spans.push_back({begin, out.pieces.size()});
  }
  return out;
}

}  // namespace lexlift::task
