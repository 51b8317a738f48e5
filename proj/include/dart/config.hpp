#pragma once

#include "dart/dataset.hpp"
#include "dart/http_backend.hpp"
#include "dart/mock_backend.hpp"
#include "dart/reward.hpp"
#include "dart/rollout.hpp"
#include "dart/synthesis.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace dart {

struct BackendSettings {
  std::string kind = "mock";  ///< "mock" or "http"
  std::string endpoint = "http://localhost:8000/v1";
  std::string model_name;
  std::string ref_endpoint;  ///< empty: same as endpoint
  std::string ref_model_name;  ///< empty: same as model_name
  std::string api_key;
  double timeout = 120.0;
  int retries = 2;
  int backoff_ms = 500;
  int max_in_flight = 8;
};

/// Optimizer settings handed through to an external trainer. Nothing here is consumed locally
/// except global_batch_size, which sets the rollout logging batch.
struct TrainerSettings {
  double rl_learning_rate = 1e-6;
  double kl_coef = 0.001;
  long long global_batch_size = 32;
  long long mini_batch_size = 16;
  long long max_num_seqs = 256;
  double sft_learning_rate = 2e-5;
  long long sft_epochs = 3;
};

struct PipelineConfig {
  RewardConfig reward;
  FilterConfig filter;
  int group_size = 8;
  SamplingConfig sampling;
  SynthesisConfig synthesis;
  BackendSettings backend;
  MockConfig mock;
  TagConfig tags;
  TrainerSettings trainer;

  /// Throws ConfigError describing the first violated invariant.
  void validate() const;
};

/// Full config as a JSON tree. With `redact` the api key is replaced by "***" when set.
Json to_json(const PipelineConfig& cfg, bool redact = false);

/// Builds a config from a (possibly partial) tree layered over the defaults. Unknown keys and
/// type mismatches throw ConfigError.
PipelineConfig config_from_json(const Json& tree);

/// Environment variable for a dotted key: "reward.tau" -> "DART_REWARD__TAU".
std::string env_var_for(const std::string& dotted_key);

/// Every dotted leaf key of the config, in tree order.
std::vector<std::string> config_keys();

/// Layers the defaults, then `file`, then environment entries named by env_var_for, then
/// `overrides` ("key=value" pairs, applied left to right). String values from the environment and
/// overrides are converted to the type of the default at that key. The result is validated.
PipelineConfig resolve_config(const Json& file, const std::map<std::string, std::string>& env,
                              const std::vector<std::pair<std::string, std::string>>& overrides);

/// Reads a JSON config file. Throws ConfigError if it cannot be read or parsed.
Json load_config_file(const std::filesystem::path& path);

/// The DART_* subset of the process environment.
std::map<std::string, std::string> config_environment();

/// Backends described by the config. generator and scorer may point at the same object.
struct BackendPair {
  std::shared_ptr<GenerationBackend> generator;
  std::shared_ptr<ScoringBackend> scorer;
};
BackendPair make_backends(const PipelineConfig& cfg);

}  // namespace dart
