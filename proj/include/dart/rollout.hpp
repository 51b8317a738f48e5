#pragma once

#include "dart/backend.hpp"
#include "dart/dataset.hpp"
#include "dart/reward.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dart {

struct SamplingConfig {
  double temperature = 0.7;
  double top_p = 0.9;
  long long max_tokens = 4096;
  std::uint64_t seed = 42;
};

struct RolloutConfig {
  int group_size = 8;
  SamplingConfig sampling;
  RewardConfig reward;
};

struct Rollout {
  std::string text;
  RewardBreakdown reward;

  bool operator==(const Rollout&) const = default;
};

/// G candidate rewrites of one sample with their rewards and group-relative advantages.
struct RolloutGroup {
  std::string sample_id;
  std::vector<Rollout> rollouts;
  std::vector<double> advantages;

  bool operator==(const RolloutGroup&) const = default;
};

/// One line of the GRPO export. `reward` is the scalar final reward.
struct GrpoRecord {
  std::string sample_id;
  long long rollout_index = 0;
  std::string text;
  double reward = 0.0;
  double advantage = 0.0;

  bool operator==(const GrpoRecord&) const = default;
};

inline constexpr double kAdvantageEpsilon = 1e-8;

/// (r_i - mean) / (population std + 1e-8). A group whose rewards are all equal, including a
/// single-rollout group, gets all zeros. Throws std::invalid_argument on an empty list.
std::vector<double> group_advantages(std::span<const double> rewards);

/// Scores one completion of `sample`. The reference model is conditioned on `scoring_prompt`.
/// An empty completion scores zero without a backend call.
RewardBreakdown score_rollout(const Sample& sample, const std::string& completion, const std::string& scoring_prompt,
                              const ScoringBackend& scorer, const RewardConfig& cfg);

/// Generates G rewrites from the rendered mapper prompt, scores each, and computes advantages.
/// Any failure is rethrown as SampleError carrying the sample id.
RolloutGroup collect_group(const Sample& sample, const GenerationBackend& generator, const ScoringBackend& scorer,
                           const PromptTemplate& tmpl, const RolloutConfig& cfg);

/// Per-sample outcome of a batch run; exactly one of `group` / `error` is set.
struct GroupResult {
  std::optional<RolloutGroup> group;
  std::optional<std::string> error;
};

/// Collects groups for every sample on up to `max_workers` threads. Results are in input order.
std::vector<GroupResult> collect_groups(std::span<const Sample> samples, const GenerationBackend& generator,
                                        const ScoringBackend& scorer, const PromptTemplate& tmpl,
                                        const RolloutConfig& cfg, std::size_t max_workers);

/// Mean final reward of consecutive batches of `batch_size` groups (all rollouts pooled).
std::vector<double> batch_mean_rewards(std::span<const RolloutGroup> groups, std::size_t batch_size);

/// Flattens groups into export records ordered by (sample_id, rollout_index).
std::vector<GrpoRecord> to_grpo_records(std::span<const RolloutGroup> groups);

Json to_json(const GrpoRecord& r);
GrpoRecord grpo_from_json(const Json& j);

void export_grpo_batch(std::span<const RolloutGroup> groups, const std::filesystem::path& path);
std::vector<GrpoRecord> read_grpo_batch(const std::filesystem::path& path);

}  // namespace dart
