#pragma once

#include "dart/records.hpp"
#include "json.hpp"

#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dart {

/// Insertion-ordered JSON keeps the on-disk field order equal to the declaration order.
using Json = nlohmann::ordered_json;

// JSON mapping for the record types. Readers validate the per-type invariants and throw DataError.
Json to_json(const Sample& s);
Json to_json(const RewardBreakdown& r);
Json to_json(const FilterDecision& f);
Json to_json(const Candidate& c);
Json to_json(const OptimizedSample& o);
Json to_json(const SftRecord& r);

Sample sample_from_json(const Json& j);
RewardBreakdown reward_from_json(const Json& j);
FilterDecision filter_from_json(const Json& j);
Candidate candidate_from_json(const Json& j);
OptimizedSample optimized_from_json(const Json& j);
SftRecord sft_from_json(const Json& j);

/// Serialize one JSON value as a single JSONL line (no trailing newline).
std::string dump_line(const Json& j);

/// Calls `fn(json, line_number)` for every non-blank line. Parse failures become DataError with
/// the 1-based line number; exceptions thrown by `fn` that are DataError without a line number
/// are re-thrown with it attached.
void for_each_jsonl_line(std::istream& in, const std::function<void(const Json&, std::size_t)>& fn);
void for_each_jsonl_line(const std::filesystem::path& path,
                         const std::function<void(const Json&, std::size_t)>& fn);

/// Writes one line per value. An empty list produces a zero-byte file.
void write_jsonl(const std::filesystem::path& path, std::span<const Json> lines);

std::vector<Sample> parse_samples(std::istream& in);
std::vector<Sample> read_samples(const std::filesystem::path& path);
void write_samples(const std::filesystem::path& path, std::span<const Sample> samples);

void write_candidates(const std::filesystem::path& path, std::span<const Candidate> records);
std::vector<Candidate> read_candidates(const std::filesystem::path& path);

/// Rejects (DataError) any record that is accepted but has an empty optimized_cot before anything
/// is written.
void write_optimized(const std::filesystem::path& path, std::span<const OptimizedSample> records);
std::vector<OptimizedSample> read_optimized(const std::filesystem::path& path);

void write_sft(const std::filesystem::path& path, std::span<const SftRecord> records);
std::vector<SftRecord> read_sft(const std::filesystem::path& path);

/// Index samples by id. Throws DataError on duplicates.
std::map<std::string, const Sample*> index_by_id(std::span<const Sample> samples);

/// Text with `{NAME}` placeholders. Names are upper-case words, optionally with spaces or
/// underscores (`{QUESTION}`, `{REFERENCE ANSWER}`). Any other brace content (`\boxed{}`) is
/// literal text.
class PromptTemplate {
 public:
  explicit PromptTemplate(std::string text);

  const std::string& text() const noexcept { return text_; }
  std::vector<std::string> placeholders() const;

  /// Substitutes every placeholder. Bound values are inserted verbatim and never re-scanned.
  /// Throws std::invalid_argument naming the first placeholder without a binding.
  std::string render(const std::map<std::string, std::string>& bindings) const;

  /// Mapper rewrite prompt: question and reference answer in, restated solution out.
  static PromptTemplate mapper();
  /// System prompt for producing original demonstrations with a teacher model.
  static PromptTemplate original_cot();
  /// Evaluation prompt used for every benchmark.
  static PromptTemplate evaluation();

  static PromptTemplate from_file(const std::filesystem::path& path);

 private:
  struct Segment {
    bool placeholder;
    std::string text;
  };
  std::string text_;
  std::vector<Segment> segments_;
};

inline constexpr std::string_view kQuestionKey = "QUESTION";
inline constexpr std::string_view kReferenceAnswerKey = "REFERENCE ANSWER";

/// Instruction tail appended to SFT prompts and shared with the evaluation prompt.
inline constexpr std::string_view kBoxedInstructionTail =
    "Let's think step by step and output the final answer within \\boxed{}.";

/// Binds QUESTION to the sample prompt and REFERENCE ANSWER to its demonstration.
std::string render_mapper_prompt(const PromptTemplate& tmpl, const Sample& sample);

}  // namespace dart
