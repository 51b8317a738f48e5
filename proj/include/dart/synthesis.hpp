#pragma once

#include "dart/backend.hpp"
#include "dart/dataset.hpp"
#include "dart/reward.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace dart {

/// Structural bounds of the synthesis filter. Lengths are whitespace-word counts.
struct FilterConfig {
  long long max_tokens = 4096;
  long long min_tokens = 20;
  int max_repeat_ngram = 6;  ///< n-gram length checked for verbatim repetition
  int repeat_limit = 4;      ///< an n-gram occurring more often than this is redundant

  void validate() const;
};

/// Decoding settings for the rewrite pass. Greedy by default.
struct SynthesisConfig {
  double temperature = 0.0;
  double top_p = 1.0;
  long long max_tokens = 4096;
  std::uint64_t seed = 42;
};

/// Wrappers placed around every SFT target. Empty by default.
struct TagConfig {
  std::string open;
  std::string close;
};

/// Rewrites the sample's demonstration through the mapper prompt. Backend failures are rethrown as
/// SampleError.
std::string synthesize_candidate(const Sample& sample, const GenerationBackend& generator, const PromptTemplate& tmpl,
                                 const SynthesisConfig& cfg);

struct CandidateResult {
  std::optional<Candidate> candidate;
  std::optional<std::string> error;
};

std::vector<CandidateResult> synthesize_all(std::span<const Sample> samples, const GenerationBackend& generator,
                                            const PromptTemplate& tmpl, const SynthesisConfig& cfg,
                                            std::size_t max_workers);

/// Attaches a reward to each candidate. The reference model is conditioned on the rendered mapper
/// prompt of the candidate's sample. Unknown sample ids are reported as errors.
std::vector<CandidateResult> score_candidates(std::span<const Candidate> candidates, std::span<const Sample> samples,
                                              const ScoringBackend& scorer, const PromptTemplate& tmpl,
                                              const RewardConfig& cfg, std::size_t max_workers);

/// Highest occurrence count of any n-gram of whitespace words (overlapping windows).
std::size_t max_ngram_count(std::string_view text, int n);

FilterDecision apply_filter(const Sample& sample, std::string_view candidate, const FilterConfig& cfg);

/// Runs the filter over scored candidates in input order. Throws ValidationError for a candidate
/// without a reward or with an unknown sample id.
std::vector<OptimizedSample> filter_candidates(std::span<const Candidate> candidates, std::span<const Sample> samples,
                                               const FilterConfig& cfg);

/// Prompt of an SFT pair: the sample prompt followed by the boxed-answer instruction, unless the
/// prompt already ends with it.
std::string sft_prompt(const std::string& prompt);

/// Builds {prompt, target} pairs. Throws ValidationError if any record is not accepted or refers
/// to an unknown sample.
std::vector<SftRecord> build_sft_records(std::span<const OptimizedSample> accepted, std::span<const Sample> samples,
                                         const TagConfig& tags);

void emit_sft_dataset(std::span<const OptimizedSample> accepted, std::span<const Sample> samples,
                      const std::filesystem::path& path, const TagConfig& tags);

struct NllReport {
  double per_sequence = 0.0;  ///< (1/n) * sum_i sum_t -ln P(target_it | ...)
  double per_token = 0.0;     ///< total NLL / total target tokens
  long long sequences = 0;
  long long tokens = 0;
};

/// Evaluates the SFT negative log-likelihood of `dataset` under the scoring backend. Throws
/// std::invalid_argument on an empty dataset.
NllReport mean_nll(std::span<const SftRecord> dataset, const ScoringBackend& scorer);

}  // namespace dart
