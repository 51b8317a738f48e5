#pragma once

#include "dart/answer.hpp"
#include "dart/records.hpp"

#include <span>
#include <string>
#include <string_view>

namespace dart {

/// Parameters of the composite reward.
struct RewardConfig {
  double tau = 0.5;            ///< tokens with reference probability strictly below tau are penalized
  double tolerance_T = -10.0;  ///< summed log-prob the penalty tolerates before decaying
  double beta = 0.1;           ///< decay coefficient of the alignment penalty
  long long l_min = 50;        ///< minimum reasoning length (tokens) for a nonzero reward

  /// Throws DomainError unless 0 < tau < 1, tolerance_T <= 0, beta > 0, l_min >= 0.
  void validate() const;
};

/// Reference-model probability of one completion token given everything before it.
struct TokenScore {
  std::string token_id;  ///< token text as reported by the scoring server
  double ref_prob = 1.0;
  long long position = 0;  ///< 1-based index within the completion

  bool operator==(const TokenScore&) const = default;
};

/// Sum of ln(p) over tokens with p < tau. Throws DomainError for p outside (0, 1] or positions
/// that are not strictly increasing.
double compute_s_hard(std::span<const TokenScore> scores, double tau);

/// min(0, s_hard - T).
double compute_excess(double s_hard, const RewardConfig& cfg);

/// exp(beta * min(0, s_hard - T)); exactly 1.0 when s_hard >= T.
double compute_p_align(double s_hard, const RewardConfig& cfg);

double score_r_base(OutcomeTier tier);

double compute_p_cheat(long long l_valid, const RewardConfig& cfg);

RewardBreakdown compute_reward(std::span<const TokenScore> scores, OutcomeTier tier, long long l_valid,
                               const RewardConfig& cfg);

/// Reasoning length: number of completion tokens that end at or before the start of the final
/// `\boxed{}` marker. Without a boxed answer every token counts. Token boundaries come from
/// `scores` when their concatenation ends with `completion` (a leading token may straddle the
/// prompt boundary); otherwise whitespace words of the completion are counted.
long long count_valid_tokens(std::span<const TokenScore> scores, std::string_view completion);

/// Classifies `completion` against `truth`, measures its reasoning length and combines everything
/// into a breakdown.
RewardBreakdown score_completion(std::string_view completion, std::string_view truth,
                                 std::span<const TokenScore> scores, const RewardConfig& cfg);

}  // namespace dart
