#pragma once

#include "dart/dataset.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dart {

/// Per-response correctness of one sample; all records in a run share the same k.
struct EvalRecord {
  std::string sample_id;
  std::vector<bool> rollout_correct;
  bool operator==(const EvalRecord&) const = default;
};

/// Mean per-sample fraction correct, as a percentage in [0, 100]. Throws ValidationError on an
/// empty list, an empty record, or a record whose k differs from the first one.
double avg_at_k(std::span<const EvalRecord> records);

/// "75.00"
std::string format_percent(double pct);

/// One input line: sampled responses for a sample plus its ground truth.
struct EvalInput {
  std::string sample_id;
  std::vector<std::string> responses;
  std::optional<std::string> ground_truth;
  std::string dataset;  ///< grouping key for the summary; "all" when absent
};

EvalInput eval_input_from_json(const Json& j);
std::vector<EvalInput> read_eval_inputs(const std::filesystem::path& path);

/// A response counts as correct when its outcome tier is not Incorrect (boxed or not).
/// Throws ValidationError when a sample has no ground truth or no responses, or when `k` is given
/// and a sample's response count differs from it.
std::vector<EvalRecord> grade_responses(std::span<const EvalInput> inputs, std::optional<std::size_t> k = {});

struct DatasetScore {
  std::string dataset;
  std::size_t samples = 0;
  std::size_t k = 0;
  double avg = 0.0;
};

/// avg@k per dataset (sorted by name) followed by an "all" row over every record.
std::vector<DatasetScore> summarize(std::span<const EvalInput> inputs, std::span<const EvalRecord> records);

Json to_json(const DatasetScore& s);

}  // namespace dart
