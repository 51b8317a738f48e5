#include "dart/reward.hpp"

#include "dart/errors.hpp"
#include "dart/text.hpp"

#include <cmath>
#include <string>

namespace dart {

void RewardConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("reward.tau must lie in (0, 1), got " + std::to_string(tau));
  if (!(tolerance_T <= 0.0)) throw DomainError("reward.tolerance_T must be <= 0, got " + std::to_string(tolerance_T));
  if (!(beta > 0.0)) throw DomainError("reward.beta must be > 0, got " + std::to_string(beta));
  if (l_min < 0) throw DomainError("reward.l_min must be >= 0");
}

double compute_s_hard(std::span<const TokenScore> scores, double tau) {
  double sum = 0.0;
  long long last_position = 0;
  bool first = true;
  for (const auto& s : scores) {
    if (!(s.ref_prob > 0.0 && s.ref_prob <= 1.0))
      throw DomainError("reference probability must lie in (0, 1], got " + std::to_string(s.ref_prob) +
                        " at position " + std::to_string(s.position));
    if (!first && s.position <= last_position)
      throw DomainError("token positions must be strictly increasing");
    first = false;
    last_position = s.position;
    if (s.ref_prob < tau) sum += std::log(s.ref_prob);
  }
  return sum;
}

double compute_excess(double s_hard, const RewardConfig& cfg) {
  if (!(s_hard <= 0.0)) throw DomainError("s_hard must be <= 0");
  return std::min(0.0, s_hard - cfg.tolerance_T);
}

double compute_p_align(double s_hard, const RewardConfig& cfg) {
  double e = compute_excess(s_hard, cfg);
  if (e == 0.0) return 1.0;
  return std::exp(cfg.beta * e);
}

double score_r_base(OutcomeTier tier) {
  switch (tier) {
    case OutcomeTier::CorrectStandard: return 1.0;
    case OutcomeTier::CorrectNonStandard: return 0.5;
    case OutcomeTier::Incorrect: return 0.0;
  }
  return 0.0;
}

double compute_p_cheat(long long l_valid, const RewardConfig& cfg) {
  return l_valid >= cfg.l_min ? 1.0 : 0.0;
}

RewardBreakdown compute_reward(std::span<const TokenScore> scores, OutcomeTier tier, long long l_valid,
                               const RewardConfig& cfg) {
  cfg.validate();
  if (l_valid < 0) throw DomainError("l_valid must be >= 0");
  RewardBreakdown r;
  r.s_hard = compute_s_hard(scores, cfg.tau);
  r.excess_e = compute_excess(r.s_hard, cfg);
  r.p_align = compute_p_align(r.s_hard, cfg);
  r.r_base = score_r_base(tier);
  r.p_cheat = compute_p_cheat(l_valid, cfg);
  r.l_valid = l_valid;
  r.r_final = r.r_base * r.p_align * r.p_cheat;
  return r;
}

long long count_valid_tokens(std::span<const TokenScore> scores, std::string_view completion) {
  ExtractionResult ex = extract_boxed(completion);
  std::size_t cutoff = ex.boxed ? ex.span.begin : completion.size();

  std::string joined;
  for (const auto& s : scores) joined += s.token_id;
  if (!scores.empty() && joined.ends_with(completion) && !completion.empty()) {
    std::size_t base = joined.size() - completion.size();
    std::size_t end = 0;
    long long count = 0;
    for (const auto& s : scores) {
      end += s.token_id.size();
      if (end <= base) continue;  // entirely inside the prompt echo
      if (end - base <= cutoff) ++count;
    }
    return count;
  }
  return static_cast<long long>(count_word_tokens(completion.substr(0, cutoff)));
}

RewardBreakdown score_completion(std::string_view completion, std::string_view truth,
                                 std::span<const TokenScore> scores, const RewardConfig& cfg) {
  OutcomeTier tier = classify_outcome(completion, truth);
  long long l_valid = count_valid_tokens(scores, completion);
  return compute_reward(scores, tier, l_valid, cfg);
}

}  // namespace dart
