#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace dart {

struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const TextSpan&) const = default;
};

/// Final answer found in a chain of thought.
///
/// For a boxed answer `span` covers the whole `\boxed{...}` marker; for the unboxed fallback it
/// covers the number-like token. `answer` is always set when `boxed` is true.
struct ExtractionResult {
  std::optional<std::string> answer;
  bool boxed = false;
  TextSpan span;
};

enum class OutcomeTier { CorrectStandard, CorrectNonStandard, Incorrect };

std::string to_string(OutcomeTier tier);

/// Content of the last balanced `\boxed{...}`. Without one, falls back to the last number-like
/// token in the final sentence (boxed=false). Boxes whose content is blank are ignored.
ExtractionResult extract_boxed(std::string_view text);

/// Canonical comparison form: trimmed, outer formatting (`$..$`, `\(..\)`, `\boxed{}`, `\text{}`,
/// wrapping braces, trailing period) stripped, whitespace removed.
std::string canonical_answer(std::string_view answer);

/// True iff both answers parse to the same exact rational, or otherwise their canonical forms match
/// case-insensitively.
bool answers_equivalent(std::string_view candidate, std::string_view truth);

/// Exact-rational parse of an answer string, rendered as "p/q" in lowest terms ("110", "1/2").
/// Empty when the text is not a plain number, decimal, a/b or \frac{a}{b}.
std::optional<std::string> exact_value(std::string_view answer);

OutcomeTier classify_outcome(std::string_view text, std::string_view truth);

}  // namespace dart
