#pragma once

#include "dart/answer.hpp"

#include <cctype>
#include <string_view>
#include <vector>

namespace dart {

/// Whitespace word tokenization that covers the input exactly: every token is a run of leading
/// whitespace followed by non-whitespace, and trailing whitespace attaches to the last token.
/// Concatenating the tokens reproduces the text. Used wherever no server tokenizer is available
/// (filter length bounds, the mock backend).
inline std::vector<TextSpan> word_token_spans(std::string_view text) {
  auto space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  std::vector<TextSpan> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t begin = i;
    while (i < text.size() && space(text[i])) ++i;
    if (i == text.size()) {
      if (!spans.empty()) spans.back().end = i;
      break;
    }
    while (i < text.size() && !space(text[i])) ++i;
    spans.push_back({begin, i});
  }
  return spans;
}

inline std::size_t count_word_tokens(std::string_view text) { return word_token_spans(text).size(); }

}  // namespace dart
