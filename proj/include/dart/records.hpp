#pragma once

// Canonical record types shared by every pipeline stage. JSON field names are the snake_case
// member names below.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dart {

/// One supervision pair (prompt x, demonstration y) with its reference final answer.
struct Sample {
  std::string id;
  std::string prompt;
  std::string demonstration;
  std::string ground_truth;
  /// Free-form metadata. Unknown top-level JSON fields land here on read.
  std::map<std::string, std::string> meta;

  bool operator==(const Sample&) const = default;
};

/// Full decomposition of the composite rollout reward.
struct RewardBreakdown {
  double s_hard = 0.0;    ///< sum of ln(p) over sub-threshold tokens, <= 0
  double excess_e = 0.0;  ///< min(0, s_hard - T), <= 0
  double p_align = 1.0;   ///< exp(beta * excess_e), in (0, 1]
  double r_base = 0.0;    ///< 1.0 / 0.5 / 0.0 by outcome tier
  double p_cheat = 1.0;   ///< 1.0 iff l_valid >= l_min
  double r_final = 0.0;   ///< r_base * p_align * p_cheat
  long long l_valid = 0;  ///< reasoning tokens before the final boxed marker

  bool operator==(const RewardBreakdown&) const = default;
};

enum class FilterReason { IncorrectAnswer, MissingAnswer, TooLong, TooShort, RedundancyExceeded };

std::string to_string(FilterReason reason);
FilterReason filter_reason_from_string(const std::string& name);

/// Verdict of the synthesis filter. accepted == reasons.empty().
struct FilterDecision {
  bool accepted = true;
  std::vector<FilterReason> reasons;

  bool operator==(const FilterDecision&) const = default;
};

/// A synthesized rewrite that has not been through the filter yet. The reward is filled in by the
/// scoring stage.
struct Candidate {
  std::string sample_id;
  std::string optimized_cot;
  std::optional<RewardBreakdown> reward;

  bool operator==(const Candidate&) const = default;
};

/// Output of the filter stage: a rewrite with its reward and verdict.
struct OptimizedSample {
  std::string sample_id;
  std::string optimized_cot;
  RewardBreakdown reward;
  FilterDecision filter;

  bool operator==(const OptimizedSample&) const = default;
};

/// One line of the SFT export.
struct SftRecord {
  std::string prompt;
  std::string target;
  std::string sample_id;

  bool operator==(const SftRecord&) const = default;
};

}  // namespace dart
