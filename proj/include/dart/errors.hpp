#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace dart {

/// A record in a JSONL file failed to parse or violated a record invariant.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(line ? what + " (line " + std::to_string(*line) + ")" : what),
        line_(line) {}

  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  std::optional<std::size_t> line_;
};

class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation (negative probability, k > n, ...).
class DomainError : public std::domain_error {
  using std::domain_error::domain_error;
};

/// Caller-supplied collection or record that fails a structural check (mixed k, rejected record in
/// an accepted-only stream, ...).
class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Transport-level failure talking to an inference server: timeouts, connection refusal, non-2xx
/// after all retries.
class BackendError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The server answered but the payload does not follow the completions schema or violates a
/// probability invariant.
class ProtocolError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The backend cannot do what was asked (for example it does not return prompt logprobs).
class CapabilityError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unresolvable or invalid pipeline configuration (unknown key, wrong type, bad value).
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Failure processing one sample; carries the sample id so batch drivers can report per-sample.
class SampleError : public std::runtime_error {
 public:
  SampleError(std::string sample_id, const std::string& cause)
      : std::runtime_error("sample '" + sample_id + "': " + cause), sample_id_(std::move(sample_id)) {}

  const std::string& sample_id() const noexcept { return sample_id_; }

 private:
  std::string sample_id_;
};

}  // namespace dart
