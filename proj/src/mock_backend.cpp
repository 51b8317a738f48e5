#include "dart/mock_backend.hpp"

#include "dart/answer.hpp"
#include "dart/errors.hpp"
#include "dart/text.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace dart {

namespace {

constexpr std::string_view kReferenceTag = "Reference Answer: ";

std::string_view reference_answer_of(std::string_view prompt) {
  std::size_t pos = prompt.rfind(kReferenceTag);
  if (pos == std::string_view::npos) return {};
  return prompt.substr(pos + kReferenceTag.size());
}

std::string_view trim_view(std::string_view s) {
  auto space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && space(s.front())) s.remove_prefix(1);
  while (!s.empty() && space(s.back())) s.remove_suffix(1);
  return s;
}

/// Reasoning part of a demonstration: everything before the sentence holding its final box.
std::string_view reasoning_body(std::string_view demo, const ExtractionResult& ex) {
  if (!ex.answer) return trim_view(demo);
  std::size_t cut = ex.span.begin;
  while (cut > 0) {
    char c = demo[cut - 1];
    if (c == '\n') break;
    if (c == ' ' && cut >= 2 && (demo[cut - 2] == '.' || demo[cut - 2] == ':')) break;
    --cut;
  }
  return trim_view(demo.substr(0, cut));
}

std::string wrong_answer(const std::string& truth) {
  bool digits = !truth.empty() && truth.size() < 18 &&
                std::all_of(truth.begin(), truth.end(), [](char c) { return c >= '0' && c <= '9'; });
  if (digits) return std::to_string(std::stoll(truth) + 1);
  return truth + "1";
}

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

MockTemplate draw_template(std::uint64_t r) {
  std::uint64_t bucket = r % 100;
  if (bucket < 50) return MockTemplate::CorrectBoxed;
  if (bucket < 60) return MockTemplate::CorrectUnboxed;
  if (bucket < 75) return MockTemplate::Verbatim;
  if (bucket < 90) return MockTemplate::WrongBoxed;
  return MockTemplate::AnswerOnly;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_string(MockTemplate t) {
  switch (t) {
    case MockTemplate::Verbatim: return "verbatim";
    case MockTemplate::AnswerOnly: return "answer_only";
    case MockTemplate::WrongBoxed: return "wrong_boxed";
    case MockTemplate::CorrectBoxed: return "correct_boxed";
    case MockTemplate::CorrectUnboxed: return "correct_unboxed";
  }
  return "verbatim";
}

MockTemplate mock_template_from_string(std::string_view name) {
  for (auto t : {MockTemplate::Verbatim, MockTemplate::AnswerOnly, MockTemplate::WrongBoxed,
                 MockTemplate::CorrectBoxed, MockTemplate::CorrectUnboxed}) {
    if (to_string(t) == name) return t;
  }
  throw std::invalid_argument("unknown mock template '" + std::string(name) + "'");
}

MockBackend::MockBackend(MockConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.mode != "mixed") mock_template_from_string(cfg_.mode);
  if (!(cfg_.base_prob > 0.0 && cfg_.base_prob <= 1.0) || !(cfg_.low_prob > 0.0 && cfg_.low_prob <= 1.0))
    throw std::invalid_argument("mock probabilities must lie in (0, 1]");
  if (cfg_.max_markers < 0) throw std::invalid_argument("mock max_markers must be >= 0");
}

std::vector<Completion> MockBackend::generate(const GenerationRequest& req) const {
  req.validate();
  if (!cfg_.fail_marker.empty() && req.prompt.find(cfg_.fail_marker) != std::string::npos)
    throw BackendError("mock backend failure injected for this prompt");

  std::string_view demo = reference_answer_of(req.prompt);
  ExtractionResult ex = extract_boxed(demo);
  std::string truth = ex.answer.value_or("0");
  std::string_view body = reasoning_body(demo, ex);
  if (body.empty()) body = "We work through the problem one step at a time.";

  std::uint64_t seed = req.seed.value_or(cfg_.seed);
  std::uint64_t chain = mix(fnv1a64(req.prompt) ^ mix(seed));

  std::vector<Completion> out;
  out.reserve(static_cast<std::size_t>(req.n));
  for (int j = 0; j < req.n; ++j) {
    chain = mix(chain + static_cast<std::uint64_t>(j));
    std::mt19937_64 rng(chain);
    MockTemplate kind = cfg_.mode == "mixed" ? draw_template(rng()) : mock_template_from_string(cfg_.mode);

    // Restated reasoning with marker words spliced in after randomly chosen words.
    auto restated = [&] {
      auto words = word_token_spans(body);
      std::vector<std::size_t> after;
      std::uint64_t markers = rng() % static_cast<std::uint64_t>(cfg_.max_markers + 1);
      for (std::uint64_t m = 0; m < markers && !words.empty(); ++m) after.push_back(rng() % words.size());
      std::sort(after.begin(), after.end());
      std::string text = "Let me restate the solution in simpler steps.\n";
      std::size_t next = 0;
      for (std::size_t w = 0; w < words.size(); ++w) {
        text += body.substr(words[w].begin, words[w].end - words[w].begin);
        while (next < after.size() && after[next] == w) {
          text += ' ';
          text += cfg_.low_prob_marker;
          ++next;
        }
      }
      return text;
    };

    std::string text;
    switch (kind) {
      case MockTemplate::Verbatim: text = std::string(demo); break;
      case MockTemplate::AnswerOnly: text = "\\boxed{" + truth + "}"; break;
      case MockTemplate::WrongBoxed:
        text = restated() + "\nSo the final answer is \\boxed{" + wrong_answer(truth) + "}.";
        break;
      case MockTemplate::CorrectBoxed: text = restated() + "\nSo the final answer is \\boxed{" + truth + "}."; break;
      case MockTemplate::CorrectUnboxed: text = restated() + "\nSo the final answer is " + truth; break;
    }

    Completion c;
    c.text = std::move(text);
    if (req.logprobs && cfg_.report_logprobs && !c.text.empty()) c.logprobs = score_tokens({req.prompt, c.text});
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<TokenScore> MockBackend::score_tokens(const ScoreRequest& req) const {
  req.validate();
  std::vector<TokenScore> scores;
  auto spans = word_token_spans(req.completion);
  scores.reserve(spans.size());
  long long position = 0;
  for (const auto& s : spans) {
    std::string token(req.completion.substr(s.begin, s.end - s.begin));
    bool rare = !cfg_.low_prob_marker.empty() && token.find(cfg_.low_prob_marker) != std::string::npos;
    double logprob = std::log(rare ? cfg_.low_prob : cfg_.base_prob);
    scores.push_back({std::move(token), prob_from_logprob(logprob), ++position});
  }
  return scores;
}

}  // namespace dart
