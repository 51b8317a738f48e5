#include "dart/rollout.hpp"

#include "dart/errors.hpp"
#include "dart/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace dart {

std::vector<double> group_advantages(std::span<const double> rewards) {
  if (rewards.empty()) throw std::invalid_argument("group_advantages needs at least one reward");
  std::vector<double> adv(rewards.size(), 0.0);
  bool constant = std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards.front(); });
  if (constant) return adv;

  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double sq = 0.0;
  for (double r : rewards) sq += (r - mean) * (r - mean);
  const double denom = std::sqrt(sq / n) + kAdvantageEpsilon;
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / denom;
  return adv;
}

RewardBreakdown score_rollout(const Sample& sample, const std::string& completion, const std::string& scoring_prompt,
                              const ScoringBackend& scorer, const RewardConfig& cfg) {
  std::vector<TokenScore> scores;
  if (!completion.empty()) scores = scorer.score_tokens({scoring_prompt, completion});
  return score_completion(completion, sample.ground_truth, scores, cfg);
}

RolloutGroup collect_group(const Sample& sample, const GenerationBackend& generator, const ScoringBackend& scorer,
                           const PromptTemplate& tmpl, const RolloutConfig& cfg) {
  try {
    if (cfg.group_size < 1) throw std::invalid_argument("group size must be >= 1");
    const std::string prompt = render_mapper_prompt(tmpl, sample);
    GenerationRequest req;
    req.prompt = prompt;
    req.temperature = cfg.sampling.temperature;
    req.top_p = cfg.sampling.top_p;
    req.max_tokens = cfg.sampling.max_tokens;
    req.seed = cfg.sampling.seed;
    req.n = cfg.group_size;
    std::vector<Completion> completions = generator.generate(req);
    if (completions.size() != static_cast<std::size_t>(cfg.group_size))
      throw ProtocolError("backend returned " + std::to_string(completions.size()) + " completions, expected " +
                          std::to_string(cfg.group_size));

    RolloutGroup group;
    group.sample_id = sample.id;
    std::vector<double> rewards;
    for (auto& c : completions) {
      RewardBreakdown r = score_rollout(sample, c.text, prompt, scorer, cfg.reward);
      rewards.push_back(r.r_final);
      group.rollouts.push_back({std::move(c.text), r});
    }
    group.advantages = group_advantages(rewards);
    return group;
  } catch (const SampleError&) {
    throw;
  } catch (const std::exception& e) {
    throw SampleError(sample.id, e.what());
  }
}

std::vector<GroupResult> collect_groups(std::span<const Sample> samples, const GenerationBackend& generator,
                                        const ScoringBackend& scorer, const PromptTemplate& tmpl,
                                        const RolloutConfig& cfg, std::size_t max_workers) {
  std::vector<GroupResult> results(samples.size());
  auto errors = parallel_for(samples.size(), max_workers, [&](std::size_t i) {
    results[i].group = collect_group(samples[i], generator, scorer, tmpl, cfg);
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      results[i].error = e.what();
    }
  }
  return results;
}

std::vector<double> batch_mean_rewards(std::span<const RolloutGroup> groups, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  std::vector<double> means;
  for (std::size_t start = 0; start < groups.size(); start += batch_size) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t g = start; g < std::min(groups.size(), start + batch_size); ++g) {
      for (const auto& r : groups[g].rollouts) {
        sum += r.reward.r_final;
        ++count;
      }
    }
    means.push_back(count == 0 ? 0.0 : sum / static_cast<double>(count));
  }
  return means;
}

std::vector<GrpoRecord> to_grpo_records(std::span<const RolloutGroup> groups) {
  std::vector<GrpoRecord> records;
  for (const auto& g : groups) {
    if (g.rollouts.size() != g.advantages.size())
      throw ValidationError("group '" + g.sample_id + "' has mismatched rollouts and advantages");
    for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
      records.push_back({g.sample_id, static_cast<long long>(i), g.rollouts[i].text, g.rollouts[i].reward.r_final,
                         g.advantages[i]});
    }
  }
  std::stable_sort(records.begin(), records.end(), [](const GrpoRecord& a, const GrpoRecord& b) {
    return std::tie(a.sample_id, a.rollout_index) < std::tie(b.sample_id, b.rollout_index);
  });
  return records;
}

Json to_json(const GrpoRecord& r) {
  return Json{{"sample_id", r.sample_id},
              {"rollout_index", r.rollout_index},
              {"text", r.text},
              {"reward", r.reward},
              {"advantage", r.advantage}};
}

GrpoRecord grpo_from_json(const Json& j) {
  if (!j.is_object()) throw DataError("GRPO record must be a JSON object");
  try {
    GrpoRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.rollout_index = j.at("rollout_index").get<long long>();
    r.text = j.at("text").get<std::string>();
    r.reward = j.at("reward").get<double>();
    r.advantage = j.at("advantage").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed GRPO record: ") + e.what());
  }
}

void export_grpo_batch(std::span<const RolloutGroup> groups, const std::filesystem::path& path) {
  std::vector<Json> lines;
  for (const auto& r : to_grpo_records(groups)) lines.push_back(to_json(r));
  write_jsonl(path, lines);
}

std::vector<GrpoRecord> read_grpo_batch(const std::filesystem::path& path) {
  std::vector<GrpoRecord> out;
  for_each_jsonl_line(path, [&](const Json& j, std::size_t) { out.push_back(grpo_from_json(j)); });
  return out;
}

}  // namespace dart
