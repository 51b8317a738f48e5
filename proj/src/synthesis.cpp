#include "dart/synthesis.hpp"

#include "dart/answer.hpp"
#include "dart/errors.hpp"
#include "dart/parallel.hpp"
#include "dart/rollout.hpp"
#include "dart/text.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace dart {

namespace {

std::string error_text(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

std::string_view rtrim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

void FilterConfig::validate() const {
  if (max_tokens < 1) throw std::invalid_argument("filter.max_tokens must be >= 1");
  if (min_tokens < 0) throw std::invalid_argument("filter.min_tokens must be >= 0");
  if (min_tokens > max_tokens) throw std::invalid_argument("filter.min_tokens must not exceed filter.max_tokens");
  if (max_repeat_ngram < 1) throw std::invalid_argument("filter.max_repeat_ngram must be >= 1");
  if (repeat_limit < 1) throw std::invalid_argument("filter.repeat_limit must be >= 1");
}

std::string synthesize_candidate(const Sample& sample, const GenerationBackend& generator, const PromptTemplate& tmpl,
                                 const SynthesisConfig& cfg) {
  try {
    GenerationRequest req;
    req.prompt = render_mapper_prompt(tmpl, sample);
    req.temperature = cfg.temperature;
    req.top_p = cfg.top_p;
    req.max_tokens = cfg.max_tokens;
    req.seed = cfg.seed;
    req.n = 1;
    auto out = generator.generate(req);
    if (out.size() != 1) throw ProtocolError("expected exactly one completion");
    return std::move(out.front().text);
  } catch (const SampleError&) {
    throw;
  } catch (const std::exception& e) {
    throw SampleError(sample.id, e.what());
  }
}

std::vector<CandidateResult> synthesize_all(std::span<const Sample> samples, const GenerationBackend& generator,
                                            const PromptTemplate& tmpl, const SynthesisConfig& cfg,
                                            std::size_t max_workers) {
  std::vector<CandidateResult> results(samples.size());
  auto errors = parallel_for(samples.size(), max_workers, [&](std::size_t i) {
    results[i].candidate = Candidate{samples[i].id, synthesize_candidate(samples[i], generator, tmpl, cfg), {}};
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) results[i].error = error_text(errors[i]);
  }
  return results;
}

std::vector<CandidateResult> score_candidates(std::span<const Candidate> candidates, std::span<const Sample> samples,
                                              const ScoringBackend& scorer, const PromptTemplate& tmpl,
                                              const RewardConfig& cfg, std::size_t max_workers) {
  cfg.validate();
  auto index = index_by_id(samples);
  std::vector<CandidateResult> results(candidates.size());
  auto errors = parallel_for(candidates.size(), max_workers, [&](std::size_t i) {
    const Candidate& c = candidates[i];
    auto it = index.find(c.sample_id);
    if (it == index.end()) throw SampleError(c.sample_id, "no sample with this id in the dataset");
    try {
      Candidate scored = c;
      scored.reward = score_rollout(*it->second, c.optimized_cot, render_mapper_prompt(tmpl, *it->second), scorer, cfg);
      results[i].candidate = std::move(scored);
    } catch (const std::exception& e) {
      throw SampleError(c.sample_id, e.what());
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) results[i].error = error_text(errors[i]);
  }
  return results;
}

std::size_t max_ngram_count(std::string_view text, int n) {
  if (n < 1) throw std::invalid_argument("n-gram length must be >= 1");
  std::vector<std::string_view> words;
  for (const auto& span : word_token_spans(text)) {
    std::string_view w = text.substr(span.begin, span.end - span.begin);
    std::size_t a = w.find_first_not_of(" \t\r\n\v\f");
    std::size_t b = w.find_last_not_of(" \t\r\n\v\f");
    words.push_back(w.substr(a, b - a + 1));
  }
  const auto len = static_cast<std::size_t>(n);
  if (words.size() < len) return 0;

  // Key each window by its words joined with a separator that cannot occur inside a word.
  std::unordered_map<std::string, std::size_t> counts;
  std::size_t best = 0;
  for (std::size_t i = 0; i + len <= words.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < len; ++k) {
      key += words[i + k];
      key += '\n';
    }
    best = std::max(best, ++counts[key]);
  }
  return best;
}

FilterDecision apply_filter(const Sample& sample, std::string_view candidate, const FilterConfig& cfg) {
  cfg.validate();
  FilterDecision d;
  ExtractionResult ex = extract_boxed(candidate);
  if (!ex.answer) {
    d.reasons.push_back(FilterReason::MissingAnswer);
  } else if (classify_outcome(candidate, sample.ground_truth) == OutcomeTier::Incorrect) {
    d.reasons.push_back(FilterReason::IncorrectAnswer);
  }
  const auto tokens = static_cast<long long>(count_word_tokens(candidate));
  if (tokens > cfg.max_tokens) d.reasons.push_back(FilterReason::TooLong);
  if (tokens < cfg.min_tokens) d.reasons.push_back(FilterReason::TooShort);
  if (max_ngram_count(candidate, cfg.max_repeat_ngram) > static_cast<std::size_t>(cfg.repeat_limit))
    d.reasons.push_back(FilterReason::RedundancyExceeded);
  d.accepted = d.reasons.empty();
  return d;
}

std::vector<OptimizedSample> filter_candidates(std::span<const Candidate> candidates, std::span<const Sample> samples,
                                               const FilterConfig& cfg) {
  cfg.validate();
  auto index = index_by_id(samples);
  std::vector<OptimizedSample> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    auto it = index.find(c.sample_id);
    if (it == index.end()) throw ValidationError("candidate refers to unknown sample '" + c.sample_id + "'");
    if (!c.reward) throw ValidationError("candidate '" + c.sample_id + "' has no reward; run the score stage first");
    out.push_back({c.sample_id, c.optimized_cot, *c.reward, apply_filter(*it->second, c.optimized_cot, cfg)});
  }
  return out;
}

std::string sft_prompt(const std::string& prompt) {
  std::string_view trimmed = rtrim(prompt);
  if (trimmed.ends_with(kBoxedInstructionTail)) return std::string(trimmed);
  return std::string(trimmed) + " " + std::string(kBoxedInstructionTail);
}

std::vector<SftRecord> build_sft_records(std::span<const OptimizedSample> accepted, std::span<const Sample> samples,
                                         const TagConfig& tags) {
  auto index = index_by_id(samples);
  for (const auto& r : accepted) {
    if (!r.filter.accepted) throw ValidationError("record '" + r.sample_id + "' was rejected by the filter");
    if (!index.contains(r.sample_id)) throw ValidationError("record refers to unknown sample '" + r.sample_id + "'");
  }
  std::vector<SftRecord> out;
  out.reserve(accepted.size());
  for (const auto& r : accepted) {
    out.push_back({sft_prompt(index.at(r.sample_id)->prompt), tags.open + r.optimized_cot + tags.close, r.sample_id});
  }
  return out;
}

void emit_sft_dataset(std::span<const OptimizedSample> accepted, std::span<const Sample> samples,
                      const std::filesystem::path& path, const TagConfig& tags) {
  auto records = build_sft_records(accepted, samples, tags);
  if (records.empty()) spdlog::warn("no accepted records; writing an empty SFT dataset to {}", path.string());
  write_sft(path, records);
}

NllReport mean_nll(std::span<const SftRecord> dataset, const ScoringBackend& scorer) {
  if (dataset.empty()) throw std::invalid_argument("mean_nll needs a nonempty dataset");
  NllReport report;
  double total = 0.0;
  for (const auto& rec : dataset) {
    auto scores = scorer.score_tokens({rec.prompt, rec.target});
    for (const auto& s : scores) {
      if (!(s.ref_prob > 0.0 && s.ref_prob <= 1.0)) throw DomainError("token probability outside (0, 1]");
      total -= std::log(s.ref_prob);
    }
    report.tokens += static_cast<long long>(scores.size());
  }
  report.sequences = static_cast<long long>(dataset.size());
  report.per_sequence = total / static_cast<double>(report.sequences);
  report.per_token = report.tokens == 0 ? 0.0 : total / static_cast<double>(report.tokens);
  return report;
}

}  // namespace dart
