#include "dart/dataset.hpp"

#include "dart/errors.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace dart {

namespace {

const std::string& require_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
  if (!it->is_string()) throw DataError(std::string("field '") + key + "' must be a string");
  return it->get_ref<const std::string&>();
}

double require_number(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number())
    throw DataError(std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

void require_object(const Json& j, const char* what) {
  if (!j.is_object()) throw DataError(std::string(what) + " record must be a JSON object");
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

template <typename T, typename ToJson>
void write_records(const std::filesystem::path& path, std::span<const T> records, ToJson&& conv) {
  std::vector<Json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(conv(r));
  write_jsonl(path, lines);
}

template <typename T, typename FromJson>
std::vector<T> read_records(const std::filesystem::path& path, FromJson&& conv) {
  std::vector<T> out;
  for_each_jsonl_line(path, [&](const Json& j, std::size_t) { out.push_back(conv(j)); });
  return out;
}

constexpr std::string_view kMapperText =
    "Rewrite the worked solution below as your own solution to the question. Keep the steps you "
    "need, drop the ones you do not, and use plain wording. "
    "Question: {QUESTION}. Let's think step by step and output the final answer within "
    "\\boxed{}. Reference Answer: {REFERENCE ANSWER}";

constexpr std::string_view kOriginalCotText =
    "Solve the following math or reasoning task. Write out each step of your reasoning, then "
    "state the final answer inside \\boxed{}.";

constexpr std::string_view kEvaluationText =
    "Question: {QUESTION}. Let's think step by step and output the final answer within "
    "\\boxed{}.";

bool is_name_char(char c) { return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == ' '; }

}  // namespace

std::string to_string(FilterReason reason) {
  switch (reason) {
    case FilterReason::IncorrectAnswer: return "IncorrectAnswer";
    case FilterReason::MissingAnswer: return "MissingAnswer";
    case FilterReason::TooLong: return "TooLong";
    case FilterReason::TooShort: return "TooShort";
    case FilterReason::RedundancyExceeded: return "RedundancyExceeded";
  }
  return "Unknown";
}

FilterReason filter_reason_from_string(const std::string& name) {
  for (auto r : {FilterReason::IncorrectAnswer, FilterReason::MissingAnswer, FilterReason::TooLong,
                 FilterReason::TooShort, FilterReason::RedundancyExceeded}) {
    if (to_string(r) == name) return r;
  }
  throw DataError("unknown filter reason '" + name + "'");
}

Json to_json(const Sample& s) {
  Json meta = Json::object();
  for (const auto& [k, v] : s.meta) meta[k] = v;
  return Json{{"id", s.id},
              {"prompt", s.prompt},
              {"demonstration", s.demonstration},
              {"ground_truth", s.ground_truth},
              {"meta", std::move(meta)}};
}

Json to_json(const RewardBreakdown& r) {
  return Json{{"s_hard", r.s_hard},   {"excess_e", r.excess_e}, {"p_align", r.p_align},
              {"r_base", r.r_base},   {"p_cheat", r.p_cheat},   {"r_final", r.r_final},
              {"l_valid", r.l_valid}};
}

Json to_json(const FilterDecision& f) {
  Json reasons = Json::array();
  for (auto r : f.reasons) reasons.push_back(to_string(r));
  return Json{{"accepted", f.accepted}, {"reasons", std::move(reasons)}};
}

Json to_json(const Candidate& c) {
  Json j{{"sample_id", c.sample_id}, {"optimized_cot", c.optimized_cot}};
  if (c.reward) j["reward"] = to_json(*c.reward);
  return j;
}

Json to_json(const OptimizedSample& o) {
  return Json{{"sample_id", o.sample_id},
              {"optimized_cot", o.optimized_cot},
              {"reward", to_json(o.reward)},
              {"filter", to_json(o.filter)}};
}

Json to_json(const SftRecord& r) {
  return Json{{"prompt", r.prompt}, {"target", r.target}, {"sample_id", r.sample_id}};
}

Sample sample_from_json(const Json& j) {
  require_object(j, "sample");
  Sample s;
  s.id = require_string(j, "id");
  s.prompt = require_string(j, "prompt");
  s.ground_truth = require_string(j, "ground_truth");
  if (j.contains("demonstration")) s.demonstration = require_string(j, "demonstration");
  if (s.id.empty()) throw DataError("sample id must be nonempty");
  if (s.prompt.empty()) throw DataError("sample '" + s.id + "' has an empty prompt");
  if (s.ground_truth.empty()) throw DataError("sample '" + s.id + "' has an empty ground_truth");

  auto keep = [&s](const std::string& key, const Json& value) {
    s.meta[key] = value.is_string() ? value.get<std::string>() : value.dump();
  };
  if (auto it = j.find("meta"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw DataError("field 'meta' must be an object");
    for (const auto& [k, v] : it->items()) keep(k, v);
  }
  static const std::set<std::string> known{"id", "prompt", "demonstration", "ground_truth", "meta"};
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) keep(k, v);
  }
  return s;
}

RewardBreakdown reward_from_json(const Json& j) {
  require_object(j, "reward");
  RewardBreakdown r;
  r.s_hard = require_number(j, "s_hard");
  r.excess_e = require_number(j, "excess_e");
  r.p_align = require_number(j, "p_align");
  r.r_base = require_number(j, "r_base");
  r.p_cheat = require_number(j, "p_cheat");
  r.r_final = require_number(j, "r_final");
  auto it = j.find("l_valid");
  if (it == j.end() || !it->is_number_integer() || it->get<long long>() < 0)
    throw DataError("field 'l_valid' must be a nonnegative integer");
  r.l_valid = it->get<long long>();
  return r;
}

FilterDecision filter_from_json(const Json& j) {
  require_object(j, "filter");
  FilterDecision f;
  auto acc = j.find("accepted");
  if (acc == j.end() || !acc->is_boolean()) throw DataError("field 'accepted' must be a boolean");
  f.accepted = acc->get<bool>();
  auto reasons = j.find("reasons");
  if (reasons != j.end()) {
    if (!reasons->is_array()) throw DataError("field 'reasons' must be an array");
    for (const auto& r : *reasons) {
      if (!r.is_string()) throw DataError("filter reasons must be strings");
      f.reasons.push_back(filter_reason_from_string(r.get<std::string>()));
    }
  }
  if (f.accepted != f.reasons.empty())
    throw DataError("filter decision is inconsistent: accepted must hold exactly when no reason is given");
  return f;
}

Candidate candidate_from_json(const Json& j) {
  require_object(j, "candidate");
  Candidate c;
  c.sample_id = require_string(j, "sample_id");
  c.optimized_cot = require_string(j, "optimized_cot");
  if (auto it = j.find("reward"); it != j.end() && !it->is_null()) c.reward = reward_from_json(*it);
  return c;
}

OptimizedSample optimized_from_json(const Json& j) {
  require_object(j, "optimized sample");
  OptimizedSample o;
  o.sample_id = require_string(j, "sample_id");
  o.optimized_cot = require_string(j, "optimized_cot");
  if (!j.contains("reward")) throw DataError("missing field 'reward'");
  if (!j.contains("filter")) throw DataError("missing field 'filter'");
  o.reward = reward_from_json(j.at("reward"));
  o.filter = filter_from_json(j.at("filter"));
  if (o.filter.accepted && o.optimized_cot.empty())
    throw DataError("accepted record '" + o.sample_id + "' has an empty optimized_cot");
  return o;
}

SftRecord sft_from_json(const Json& j) {
  require_object(j, "sft");
  return SftRecord{require_string(j, "prompt"), require_string(j, "target"),
                   require_string(j, "sample_id")};
}

std::string dump_line(const Json& j) {
  try {
    return j.dump();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("cannot serialize record: ") + e.what());
  }
}

void for_each_jsonl_line(std::istream& in, const std::function<void(const Json&, std::size_t)>& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    try {
      fn(j, lineno);
    } catch (const DataError& e) {
      if (e.line()) throw;
      throw DataError(e.what(), lineno);
    }
  }
}

void for_each_jsonl_line(const std::filesystem::path& path,
                         const std::function<void(const Json&, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  for_each_jsonl_line(in, fn);
}

void write_jsonl(const std::filesystem::path& path, std::span<const Json> lines) {
  // Serialize everything first so a bad record never leaves a half-written file.
  std::string buffer;
  for (const auto& j : lines) {
    buffer += dump_line(j);
    buffer += '\n';
  }
  auto out = open_for_write(path);
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (!out.flush()) throw IoError("write to '" + path.string() + "' failed");
}

std::vector<Sample> parse_samples(std::istream& in) {
  std::vector<Sample> out;
  std::set<std::string> seen;
  for_each_jsonl_line(in, [&](const Json& j, std::size_t) {
    Sample s = sample_from_json(j);
    if (!seen.insert(s.id).second) throw DataError("duplicate sample id '" + s.id + "'");
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<Sample> read_samples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return parse_samples(in);
}

void write_samples(const std::filesystem::path& path, std::span<const Sample> samples) {
  write_records(path, samples, [](const Sample& s) { return to_json(s); });
}

void write_candidates(const std::filesystem::path& path, std::span<const Candidate> records) {
  write_records(path, records, [](const Candidate& c) { return to_json(c); });
}

std::vector<Candidate> read_candidates(const std::filesystem::path& path) {
  return read_records<Candidate>(path, candidate_from_json);
}

void write_optimized(const std::filesystem::path& path, std::span<const OptimizedSample> records) {
  for (const auto& r : records) {
    if (r.filter.accepted != r.filter.reasons.empty())
      throw DataError("record '" + r.sample_id + "' has an inconsistent filter decision");
    if (r.filter.accepted && r.optimized_cot.empty())
      throw DataError("accepted record '" + r.sample_id + "' has an empty optimized_cot");
  }
  write_records(path, records, [](const OptimizedSample& o) { return to_json(o); });
}

std::vector<OptimizedSample> read_optimized(const std::filesystem::path& path) {
  return read_records<OptimizedSample>(path, optimized_from_json);
}

void write_sft(const std::filesystem::path& path, std::span<const SftRecord> records) {
  write_records(path, records, [](const SftRecord& r) { return to_json(r); });
}

std::vector<SftRecord> read_sft(const std::filesystem::path& path) {
  return read_records<SftRecord>(path, sft_from_json);
}

std::map<std::string, const Sample*> index_by_id(std::span<const Sample> samples) {
  std::map<std::string, const Sample*> index;
  for (const auto& s : samples) {
    if (!index.emplace(s.id, &s).second) throw DataError("duplicate sample id '" + s.id + "'");
  }
  return index;
}

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  std::string literal;
  std::size_t i = 0;
  while (i < text_.size()) {
    if (text_[i] == '{') {
      std::size_t close = text_.find('}', i + 1);
      if (close != std::string::npos && close > i + 1) {
        std::string_view name(text_.data() + i + 1, close - i - 1);
        bool valid = name.front() >= 'A' && name.front() <= 'Z' && name.back() != ' ';
        for (char c : name) valid = valid && is_name_char(c);
        if (valid) {
          if (!literal.empty()) segments_.push_back({false, std::move(literal)});
          literal.clear();
          segments_.push_back({true, std::string(name)});
          i = close + 1;
          continue;
        }
      }
    }
    literal += text_[i++];
  }
  if (!literal.empty()) segments_.push_back({false, std::move(literal)});
}

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> names;
  for (const auto& seg : segments_) {
    if (seg.placeholder && std::find(names.begin(), names.end(), seg.text) == names.end())
      names.push_back(seg.text);
  }
  return names;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& bindings) const {
  std::string out;
  for (const auto& seg : segments_) {
    if (!seg.placeholder) {
      out += seg.text;
      continue;
    }
    auto it = bindings.find(seg.text);
    if (it == bindings.end()) throw std::invalid_argument("unbound template placeholder {" + seg.text + "}");
    out += it->second;
  }
  return out;
}

PromptTemplate PromptTemplate::mapper() { return PromptTemplate(std::string(kMapperText)); }
PromptTemplate PromptTemplate::original_cot() { return PromptTemplate(std::string(kOriginalCotText)); }
PromptTemplate PromptTemplate::evaluation() { return PromptTemplate(std::string(kEvaluationText)); }

PromptTemplate PromptTemplate::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open template '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return PromptTemplate(ss.str());
}

std::string render_mapper_prompt(const PromptTemplate& tmpl, const Sample& sample) {
  return tmpl.render({{std::string(kQuestionKey), sample.prompt},
                      {std::string(kReferenceAnswerKey), sample.demonstration}});
}

}  // namespace dart
