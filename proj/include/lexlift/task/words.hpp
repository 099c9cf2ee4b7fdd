#pragma once

#include <span>
#include <string>

#include "lexlift/corpus.hpp"
#include "lexlift/wordpiece.hpp"

namespace lexlift::task {

/// Tokenizes whitespace-separated words, basic-tokenizing each one first; the
/// pieces of all its sub-words form the word's span. A word with no surviving
/// characters becomes a single [UNK].
wordpiece::TokenizationResult tokenize_words(std::span<const std::string> words, const wordpiece::Tokenizer& tokenizer,
                                             const corpus::BasicTokenizerConfig& basic);

}  // namespace lexlift::task
