#include "dart/backend.hpp"

#include "dart/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace dart {

void GenerationRequest::validate() const {
  if (n < 1) throw std::invalid_argument("generation request needs n >= 1");
  if (max_tokens < 1) throw std::invalid_argument("generation request needs max_tokens >= 1");
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw std::invalid_argument("top_p must lie in (0, 1]");
}

void ScoreRequest::validate() const {
  if (completion.empty()) throw std::invalid_argument("score request needs a nonempty completion");
}

double prob_from_logprob(double logprob) {
  if (!std::isfinite(logprob)) throw ProtocolError("non-finite token logprob");
  if (logprob > 0.0) throw ProtocolError("token logprob " + std::to_string(logprob) + " > 0 implies probability > 1");
  return std::exp(logprob);
}

}  // namespace dart
