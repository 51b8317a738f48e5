#pragma once

#include "dart/backend.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace dart {

/// Canned response shapes produced by the mock mapper.
enum class MockTemplate {
  Verbatim,        ///< the reference answer copied unchanged
  AnswerOnly,      ///< just `\boxed{answer}`; trips the length gate
  WrongBoxed,      ///< restated reasoning with a wrong boxed answer
  CorrectBoxed,    ///< restated reasoning with the right boxed answer
  CorrectUnboxed,  ///< restated reasoning, right answer without the box
};

std::string to_string(MockTemplate t);
MockTemplate mock_template_from_string(std::string_view name);

struct MockConfig {
  std::uint64_t seed = 42;
  /// "mixed" draws a template per completion; any MockTemplate name pins it.
  std::string mode = "mixed";
  double base_prob = 0.9;  ///< reference probability of an ordinary token
  double low_prob = 0.1;   ///< reference probability of a token containing the marker
  std::string low_prob_marker = "quixotically";
  int max_markers = 8;  ///< restated templates carry 0..max_markers marker words
  bool report_logprobs = true;
  /// Prompts containing this string make generate() throw BackendError. Empty disables it.
  std::string fail_marker;
};

/// Deterministic stand-in for both the mapper and the reference model.
///
/// Generation reads the reference answer back out of the rendered mapper prompt (the text after
/// the last "Reference Answer: ") and its boxed final answer, then builds each completion from a
/// template chosen by a hash chain over (prompt, seed, completion index). Scoring splits the
/// completion into whitespace words and gives each word `base_prob`, or `low_prob` if it contains
/// the marker. Output depends only on the request and the seed.
class MockBackend final : public GenerationBackend, public ScoringBackend {
 public:
  explicit MockBackend(MockConfig cfg = {});

  std::vector<Completion> generate(const GenerationRequest& req) const override;
  std::vector<TokenScore> score_tokens(const ScoreRequest& req) const override;

  const MockConfig& config() const noexcept { return cfg_; }

 private:
  MockConfig cfg_;
};

/// 64-bit FNV-1a. Platform independent, unlike std::hash.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace dart
