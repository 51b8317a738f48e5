#pragma once

#include "dart/reward.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dart {

struct GenerationRequest {
  std::string prompt;
  double temperature = 0.7;
  double top_p = 0.9;
  long long max_tokens = 4096;
  std::optional<std::uint64_t> seed;
  int n = 1;
  bool logprobs = false;  ///< ask for per-token logprobs of the sampled text

  /// Throws std::invalid_argument on n < 1, max_tokens < 1, temperature < 0, top_p outside (0, 1].
  void validate() const;
};

struct Completion {
  std::string text;
  /// Per-token scores under the generating model, when the backend reports them.
  std::optional<std::vector<TokenScore>> logprobs;

  bool operator==(const Completion&) const = default;
};

struct ScoreRequest {
  std::string prompt;      ///< conditioning prefix, not scored
  std::string completion;  ///< scored text; must be nonempty

  void validate() const;
};

/// Text generation (the mapper model). Implementations are safe to call concurrently.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  /// Returns exactly `req.n` completions.
  virtual std::vector<Completion> generate(const GenerationRequest& req) const = 0;
};

/// Token scoring under the frozen reference model. Implementations are safe to call concurrently.
class ScoringBackend {
 public:
  virtual ~ScoringBackend() = default;
  /// One TokenScore per completion token, positions 1..N.
  virtual std::vector<TokenScore> score_tokens(const ScoreRequest& req) const = 0;
};

/// Converts a reported natural-log probability into a TokenScore probability. Throws ProtocolError
/// when the logprob is positive or not finite.
double prob_from_logprob(double logprob);

}  // namespace dart
