#include "dart/eval.hpp"

#include "dart/answer.hpp"
#include "dart/errors.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace dart {

double avg_at_k(std::span<const EvalRecord> records) {
  if (records.empty()) throw ValidationError("avg@k needs at least one record");
  const std::size_t k = records.front().rollout_correct.size();
  if (k == 0) throw ValidationError("sample '" + records.front().sample_id + "' has no graded responses");
  double total = 0.0;
  for (const auto& r : records) {
    if (r.rollout_correct.size() != k)
      throw ValidationError("sample '" + r.sample_id + "' has k=" + std::to_string(r.rollout_correct.size()) +
                            " but expected k=" + std::to_string(k));
    auto hits = std::count(r.rollout_correct.begin(), r.rollout_correct.end(), true);
    total += static_cast<double>(hits) / static_cast<double>(k);
  }
  return 100.0 * total / static_cast<double>(records.size());
}

std::string format_percent(double pct) { return fmt::format("{:.2f}", pct); }

EvalInput eval_input_from_json(const Json& j) {
  if (!j.is_object()) throw DataError("eval record must be a JSON object");
  try {
    EvalInput in;
    in.sample_id = j.at("sample_id").get<std::string>();
    for (const auto& r : j.at("responses")) in.responses.push_back(r.get<std::string>());
    if (auto it = j.find("ground_truth"); it != j.end() && !it->is_null()) in.ground_truth = it->get<std::string>();
    in.dataset = j.contains("dataset") ? j["dataset"].get<std::string>() : "all";
    return in;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed eval record: ") + e.what());
  }
}

std::vector<EvalInput> read_eval_inputs(const std::filesystem::path& path) {
  std::vector<EvalInput> out;
  for_each_jsonl_line(path, [&](const Json& j, std::size_t) { out.push_back(eval_input_from_json(j)); });
  return out;
}

std::vector<EvalRecord> grade_responses(std::span<const EvalInput> inputs, std::optional<std::size_t> k) {
  std::vector<EvalRecord> out;
  out.reserve(inputs.size());
  for (const auto& in : inputs) {
    if (!in.ground_truth) throw ValidationError("sample '" + in.sample_id + "' has no ground truth");
    if (in.responses.empty()) throw ValidationError("sample '" + in.sample_id + "' has no responses");
    if (k && in.responses.size() != *k)
      throw ValidationError("sample '" + in.sample_id + "' has " + std::to_string(in.responses.size()) +
                            " responses, expected " + std::to_string(*k));
    EvalRecord r{in.sample_id, {}};
    for (const auto& resp : in.responses)
      r.rollout_correct.push_back(classify_outcome(resp, *in.ground_truth) != OutcomeTier::Incorrect);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<DatasetScore> summarize(std::span<const EvalInput> inputs, std::span<const EvalRecord> records) {
  if (inputs.size() != records.size()) throw std::invalid_argument("inputs and records differ in length");
  std::map<std::string, std::vector<EvalRecord>> by_dataset;
  for (std::size_t i = 0; i < inputs.size(); ++i) by_dataset[inputs[i].dataset].push_back(records[i]);
  std::vector<DatasetScore> out;
  if (!(by_dataset.size() == 1 && by_dataset.begin()->first == "all")) {
    for (const auto& [name, recs] : by_dataset)
      out.push_back({name, recs.size(), recs.front().rollout_correct.size(), avg_at_k(recs)});
  }
  out.push_back({"all", records.size(), records.empty() ? 0 : records.front().rollout_correct.size(),
                 avg_at_k(records)});
  return out;
}

Json to_json(const DatasetScore& s) {
  return Json{{"dataset", s.dataset}, {"samples", s.samples}, {"k", s.k}, {"avg", std::stod(format_percent(s.avg))}};
}

}  // namespace dart
