#include "dart/answer.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cctype>

namespace dart {

namespace {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

/// Index one past the brace that closes the group opened at `open` (which must be '{'), or npos.
/// Escaped braces (`\{`, `\}`) do not count.
std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (c == '\\' && i + 1 < s.size() && (s[i + 1] == '{' || s[i + 1] == '}')) {
      ++i;
      continue;
    }
    if (c == '{') ++depth;
    if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

constexpr std::string_view kBoxed = "\\boxed";

std::optional<ExtractionResult> last_boxed(std::string_view text) {
  std::size_t search_end = text.size();
  while (search_end > 0) {
    std::size_t pos = text.rfind(kBoxed, search_end - 1);
    if (pos == std::string_view::npos) break;
    std::size_t open = pos + kBoxed.size();
    while (open < text.size() && is_space(text[open])) ++open;
    if (open < text.size() && text[open] == '{') {
      std::size_t close = match_brace(text, open);
      if (close != std::string_view::npos) {
        std::string_view content = text.substr(open + 1, close - open - 2);
        if (!is_blank(content)) {
          ExtractionResult r;
          r.answer = std::string(trim(content));
          r.boxed = true;
          r.span = {pos, close};
          return r;
        }
      }
    }
    if (pos == 0) break;
    search_end = pos;
  }
  return std::nullopt;
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

/// [begin, end) of the last sentence: sentences end at a newline or at . ! ? followed by
/// whitespace. A period inside a number ("110.5") does not end a sentence.
TextSpan final_sentence(std::string_view text) {
  std::size_t end = text.size();
  while (end > 0 && (is_space(text[end - 1]) || is_terminator(text[end - 1]))) --end;
  std::size_t begin = 0;
  for (std::size_t i = end; i > 0; --i) {
    char c = text[i - 1];
    if (c == '\n' || (is_terminator(c) && i < text.size() && is_space(text[i]))) {
      begin = i;
      break;
    }
  }
  return {begin, end};
}

/// Length of a `\frac`-style token starting at `pos`, or 0.
std::size_t scan_frac(std::string_view s, std::size_t pos) {
  for (std::string_view macro : {"\\frac", "\\dfrac", "\\tfrac"}) {
    if (s.substr(pos, macro.size()) != macro) continue;
    std::size_t i = pos + macro.size();
    for (int arg = 0; arg < 2; ++arg) {
      if (i >= s.size()) return 0;
      if (s[i] == '{') {
        std::size_t close = match_brace(s, i);
        if (close == std::string_view::npos) return 0;
        i = close;
      } else if (is_digit(s[i])) {
        ++i;
      } else {
        return 0;
      }
    }
    return i - pos;
  }
  return 0;
}

/// Length of a plain number token (digits, comma groups, decimals, a/b) starting at `pos`, or 0.
std::size_t scan_number(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  auto digits = [&] {
    std::size_t start = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    return i - start;
  };
  std::size_t lead = digits();
  if (lead == 0) return 0;
  if (lead <= 3) {
    while (i + 3 < s.size() && s[i] == ',' && is_digit(s[i + 1]) && is_digit(s[i + 2]) &&
           is_digit(s[i + 3]) && (i + 4 >= s.size() || !is_digit(s[i + 4]))) {
      i += 4;
    }
  }
  if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
    ++i;
    digits();
  }
  if (i + 1 < s.size() && s[i] == '/' && is_digit(s[i + 1])) {
    ++i;
    digits();
  }
  return i - pos;
}

std::optional<ExtractionResult> last_number_in_final_sentence(std::string_view text) {
  TextSpan sentence = final_sentence(text);
  std::optional<ExtractionResult> best;
  std::size_t i = sentence.begin;
  while (i < sentence.end) {
    std::string_view window = text.substr(0, sentence.end);
    std::size_t len = scan_frac(window, i);
    bool preceded_ok = i == 0 || (!is_alnum(text[i - 1]) && text[i - 1] != '_' && text[i - 1] != '.');
    if (len == 0 && is_digit(text[i]) && preceded_ok) len = scan_number(window, i);
    if (len == 0) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    if (begin > sentence.begin && text[begin - 1] == '-' &&
        (begin - 1 == 0 || !is_alnum(text[begin - 2]))) {
      --begin;
    }
    ExtractionResult r;
    r.answer = std::string(text.substr(begin, i + len - begin));
    r.boxed = false;
    r.span = {begin, i + len};
    best = r;
    i += len;
  }
  return best;
}

bool strip_wrapper(std::string& s, std::string_view open, std::string_view close) {
  if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
    s = s.substr(open.size(), s.size() - open.size() - close.size());
    return true;
  }
  return false;
}

/// `\macro{...}` covering the whole string.
bool strip_macro(std::string& s, std::string_view macro) {
  if (!s.starts_with(macro)) return false;
  std::size_t open = macro.size();
  while (open < s.size() && is_space(s[open])) ++open;
  if (open >= s.size() || s[open] != '{') return false;
  if (match_brace(s, open) != s.size()) return false;
  s = s.substr(open + 1, s.size() - open - 2);
  return true;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::optional<BigInt> parse_digits(std::string_view s) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), is_digit)) return std::nullopt;
  // cpp_int reads a leading 0 as an octal prefix.
  std::size_t nz = s.find_first_not_of('0');
  if (nz == std::string_view::npos) return BigInt(0);
  return BigInt(std::string(s.substr(nz)));
}

BigInt pow10(unsigned e) {
  BigInt r = 1;
  for (unsigned i = 0; i < e; ++i) r *= 10;
  return r;
}

std::optional<Rational> parse_rational(std::string_view s);

std::optional<Rational> parse_decimal(std::string_view s) {
  // Comma groups are accepted only when well formed ("1,234,567").
  std::string plain;
  std::size_t comma = s.find(',');
  if (comma != std::string_view::npos) {
    std::size_t dot = s.find_first_of(".eE");
    std::string_view int_part = s.substr(0, dot);
    if (dot != std::string_view::npos && s.find(',', dot) != std::string_view::npos) return std::nullopt;
    if (comma == 0 || comma > 3) return std::nullopt;
    for (std::size_t i = comma; i < int_part.size(); i += 4) {
      if (i + 4 > int_part.size() || int_part[i] != ',' || !is_digit(int_part[i + 1]) ||
          !is_digit(int_part[i + 2]) || !is_digit(int_part[i + 3]))
        return std::nullopt;
    }
    for (char c : s) {
      if (c != ',') plain += c;
    }
  } else {
    plain = std::string(s);
  }
  std::string_view v = plain;
  long long exponent = 0;
  if (std::size_t e = v.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp_part = v.substr(e + 1);
    bool neg = false;
    if (!exp_part.empty() && (exp_part.front() == '+' || exp_part.front() == '-')) {
      neg = exp_part.front() == '-';
      exp_part.remove_prefix(1);
    }
    if (exp_part.empty() || exp_part.size() > 4 || !std::all_of(exp_part.begin(), exp_part.end(), is_digit))
      return std::nullopt;
    exponent = std::stoll(std::string(exp_part));
    if (neg) exponent = -exponent;
    v = v.substr(0, e);
  }
  std::string_view int_digits = v;
  std::string_view frac_digits;
  if (std::size_t dot = v.find('.'); dot != std::string_view::npos) {
    int_digits = v.substr(0, dot);
    frac_digits = v.substr(dot + 1);
    if (frac_digits.empty() && int_digits.empty()) return std::nullopt;
  }
  if (int_digits.empty() && frac_digits.empty()) return std::nullopt;
  std::string all = std::string(int_digits) + std::string(frac_digits);
  auto mantissa = parse_digits(all);
  if (!mantissa) return std::nullopt;
  long long scale = static_cast<long long>(frac_digits.size()) - exponent;
  if (scale > 10000 || scale < -10000) return std::nullopt;
  if (scale >= 0) return Rational(*mantissa, pow10(static_cast<unsigned>(scale)));
  return Rational(*mantissa * pow10(static_cast<unsigned>(-scale)));
}

std::optional<Rational> parse_braced_or_digit(std::string_view s, std::size_t& i) {
  if (i >= s.size()) return std::nullopt;
  if (s[i] == '{') {
    std::size_t close = match_brace(s, i);
    if (close == std::string_view::npos) return std::nullopt;
    auto v = parse_rational(s.substr(i + 1, close - i - 2));
    i = close;
    return v;
  }
  if (is_digit(s[i])) return Rational(s[i++] - '0');
  return std::nullopt;
}

std::optional<Rational> parse_rational(std::string_view s) {
  if (s.empty()) return std::nullopt;
  bool negative = false;
  while (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    if (s.front() == '-') negative = !negative;
    s.remove_prefix(1);
  }
  if (s.empty()) return std::nullopt;
  if (s.front() == '{' && match_brace(s, 0) == s.size()) {
    auto inner = parse_rational(s.substr(1, s.size() - 2));
    if (!inner) return std::nullopt;
    return negative ? Rational(-*inner) : *inner;
  }
  std::optional<Rational> value;
  if (s.starts_with("\\frac")) {
    std::size_t i = 5;
    auto num = parse_braced_or_digit(s, i);
    auto den = parse_braced_or_digit(s, i);
    if (!num || !den || i != s.size() || *den == 0) return std::nullopt;
    value = *num / *den;
  } else if (std::size_t slash = s.find('/'); slash != std::string_view::npos) {
    auto num = parse_rational(s.substr(0, slash));
    auto den = parse_rational(s.substr(slash + 1));
    if (!num || !den || *den == 0) return std::nullopt;
    value = *num / *den;
  } else {
    value = parse_decimal(s);
  }
  if (!value) return std::nullopt;
  return negative ? Rational(-*value) : *value;
}

std::string lower_ascii(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::string to_string(OutcomeTier tier) {
  switch (tier) {
    case OutcomeTier::CorrectStandard: return "CorrectStandard";
    case OutcomeTier::CorrectNonStandard: return "CorrectNonStandard";
    case OutcomeTier::Incorrect: return "Incorrect";
  }
  return "Incorrect";
}

ExtractionResult extract_boxed(std::string_view text) {
  if (auto boxed = last_boxed(text)) return *boxed;
  if (auto loose = last_number_in_final_sentence(text)) return *loose;
  return {};
}

std::string canonical_answer(std::string_view answer) {
  std::string s(trim(answer));
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    std::string before = s;
    s = std::string(trim(s));
    if (s.ends_with('.') && !s.ends_with("..")) s.pop_back();
    if (!strip_wrapper(s, "$$", "$$")) strip_wrapper(s, "$", "$");
    strip_wrapper(s, "\\(", "\\)");
    strip_wrapper(s, "\\[", "\\]");
    for (std::string_view macro : {"\\boxed", "\\text", "\\textbf", "\\mathrm", "\\mathbf", "\\mbox"}) {
      strip_macro(s, macro);
    }
    if (s.size() >= 2 && s.front() == '{' && match_brace(s, 0) == s.size()) s = s.substr(1, s.size() - 2);
    changed = s != before;
  }
  for (std::string_view spacing : {"\\left", "\\right", "\\!", "\\,", "\\;", "\\:", "\\ "}) {
    replace_all(s, spacing, "");
  }
  replace_all(s, "\\dfrac", "\\frac");
  replace_all(s, "\\tfrac", "\\frac");
  std::erase_if(s, is_space);
  return s;
}

std::optional<std::string> exact_value(std::string_view answer) {
  auto v = parse_rational(canonical_answer(answer));
  if (!v) return std::nullopt;
  auto num = boost::multiprecision::numerator(*v);
  auto den = boost::multiprecision::denominator(*v);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

bool answers_equivalent(std::string_view candidate, std::string_view truth) {
  std::string a = canonical_answer(candidate);
  std::string b = canonical_answer(truth);
  auto ra = parse_rational(a);
  auto rb = parse_rational(b);
  if (ra && rb) return *ra == *rb;
  if (ra || rb) return false;
  return lower_ascii(std::move(a)) == lower_ascii(std::move(b));
}

OutcomeTier classify_outcome(std::string_view text, std::string_view truth) {
  ExtractionResult ex = extract_boxed(text);
  if (!ex.answer || is_blank(*ex.answer) || is_blank(truth)) return OutcomeTier::Incorrect;
  if (!answers_equivalent(*ex.answer, truth)) return OutcomeTier::Incorrect;
  return ex.boxed ? OutcomeTier::CorrectStandard : OutcomeTier::CorrectNonStandard;
}

}  // namespace dart
