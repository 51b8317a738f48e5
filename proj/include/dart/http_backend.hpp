#pragma once

#include "dart/backend.hpp"

#include <memory>
#include <string>

namespace dart {

struct HttpBackendConfig {
  std::string base_url = "http://localhost:8000/v1";  ///< requests go to {base_url}/completions
  std::string model;
  std::string api_key;  ///< sent as a bearer token; never logged
  double timeout_s = 120.0;
  int retries = 2;  ///< extra attempts after the first one
  int backoff_ms = 500;
  int max_in_flight = 8;
};

/// Client for an OpenAI-compatible `/completions` endpoint.
///
/// Generation posts the prompt with the sampling parameters. Scoring posts prompt + completion
/// with `echo` and `logprobs` so the server returns logprobs for the prompt tokens themselves;
/// tokens overlapping the completion are kept. Transport failures, 429 and 5xx responses are
/// retried with exponential backoff. At most `max_in_flight` requests are outstanding at once.
class OpenAICompletionsClient final : public GenerationBackend, public ScoringBackend {
 public:
  explicit OpenAICompletionsClient(HttpBackendConfig cfg);
  ~OpenAICompletionsClient() override;

  std::vector<Completion> generate(const GenerationRequest& req) const override;
  std::vector<TokenScore> score_tokens(const ScoreRequest& req) const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dart
