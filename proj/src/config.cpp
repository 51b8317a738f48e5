#include "dart/config.hpp"

#include "dart/errors.hpp"

#include <cctype>
#include <charconv>
#include <fstream>

extern char** environ;

namespace dart {

namespace {

constexpr std::string_view kEnvPrefix = "DART_";

Json* find_path(Json& root, const std::string& dotted) {
  Json* node = &root;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = dotted.find('.', start);
    std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) return nullptr;
    node = &(*node)[part];
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

void collect_keys(const Json& node, const std::string& prefix, std::vector<std::string>& out) {
  for (const auto& [k, v] : node.items()) {
    std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object())
      collect_keys(v, key, out);
    else
      out.push_back(key);
  }
}

bool nullable(const std::string& key) { return key == "mock.seed"; }

/// Checks that `value` may replace `current` (the default at `key`) and returns it normalized.
Json coerce(const std::string& key, const Json& current, const Json& value) {
  if (value.is_null() && nullable(key)) return value;
  auto mismatch = [&] {
    return ConfigError("config key '" + key + "' expects a " + std::string(current.type_name()) + ", got " +
                       value.dump());
  };
  if (current.is_boolean()) {
    if (!value.is_boolean()) throw mismatch();
    return value;
  }
  if (current.is_string()) {
    if (!value.is_string()) throw mismatch();
    return value;
  }
  if (current.is_number_unsigned()) {
    if (value.is_number_unsigned()) return value;
    if (value.is_number_integer() && value.get<long long>() >= 0) return Json(value.get<std::uint64_t>());
    throw mismatch();
  }
  if (current.is_number_integer()) {
    if (value.is_number_integer()) return value;
    throw mismatch();
  }
  if (current.is_number_float()) {
    if (value.is_number()) return Json(value.get<double>());
    throw mismatch();
  }
  throw mismatch();
}

/// Parses a string from the environment or a flag into the type of the default at `key`.
Json parse_scalar(const std::string& key, const Json& current, const std::string& text) {
  auto bad = [&] { return ConfigError("config key '" + key + "': cannot read '" + text + "' as a " +
                                      std::string(current.type_name())); };
  if (nullable(key) && text == "null") return Json(nullptr);
  if (current.is_string()) return Json(text);
  if (current.is_boolean()) {
    if (text == "true" || text == "1") return Json(true);
    if (text == "false" || text == "0") return Json(false);
    throw bad();
  }
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (current.is_number_unsigned()) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last) throw bad();
    return Json(v);
  }
  if (current.is_number_integer()) {
    long long v = 0;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last) throw bad();
    return Json(v);
  }
  if (current.is_number_float()) {
    try {
      std::size_t used = 0;
      double v = std::stod(text, &used);
      if (used != text.size()) throw bad();
      return Json(v);
    } catch (const std::logic_error&) {
      throw bad();
    }
  }
  throw bad();
}

void merge_tree(Json& base, const Json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError("config section '" + (prefix.empty() ? "<root>" : prefix) +
                                            "' must be an object");
  for (const auto& [k, v] : patch.items()) {
    std::string key = prefix.empty() ? k : prefix + "." + k;
    if (!base.contains(k)) throw ConfigError("unknown config key '" + key + "'");
    Json& slot = base[k];
    if (slot.is_object())
      merge_tree(slot, v, key);
    else
      slot = coerce(key, slot, v);
  }
}

void set_key(Json& tree, const Json& defaults, const std::string& key, const std::string& text) {
  const Json* def = find_path(const_cast<Json&>(defaults), key);
  Json* slot = find_path(tree, key);
  if (def == nullptr || slot == nullptr || def->is_object()) throw ConfigError("unknown config key '" + key + "'");
  *slot = parse_scalar(key, *def, text);
}

template <class T>
T get_field(const Json& node, const char* key) {
  return node.at(key).get<T>();
}

}  // namespace

void PipelineConfig::validate() const {
  try {
    reward.validate();
    filter.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (group_size < 1) throw ConfigError("group_size must be >= 1");
  auto check_sampling = [](const char* name, double temperature, double top_p, long long max_tokens) {
    std::string n(name);
    if (!(temperature >= 0.0)) throw ConfigError(n + ".temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError(n + ".top_p must lie in (0, 1]");
    if (max_tokens < 1) throw ConfigError(n + ".max_tokens must be >= 1");
  };
  check_sampling("sampling", sampling.temperature, sampling.top_p, sampling.max_tokens);
  check_sampling("synthesis", synthesis.temperature, synthesis.top_p, synthesis.max_tokens);
  if (backend.kind != "mock" && backend.kind != "http")
    throw ConfigError("backend.kind must be 'mock' or 'http', got '" + backend.kind + "'");
  if (backend.kind == "http" && backend.endpoint.empty()) throw ConfigError("backend.endpoint is required for http");
  if (!(backend.timeout > 0.0)) throw ConfigError("backend.timeout must be > 0");
  if (backend.retries < 0) throw ConfigError("backend.retries must be >= 0");
  if (backend.backoff_ms < 0) throw ConfigError("backend.backoff_ms must be >= 0");
  if (backend.max_in_flight < 1) throw ConfigError("backend.max_in_flight must be >= 1");
  if (mock.mode != "mixed") {
    try {
      mock_template_from_string(mock.mode);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("mock.mode: ") + e.what());
    }
  }
  if (!(mock.base_prob > 0.0 && mock.base_prob <= 1.0)) throw ConfigError("mock.base_prob must lie in (0, 1]");
  if (!(mock.low_prob > 0.0 && mock.low_prob <= 1.0)) throw ConfigError("mock.low_prob must lie in (0, 1]");
  if (mock.max_markers < 0) throw ConfigError("mock.max_markers must be >= 0");
  if (trainer.global_batch_size < 1) throw ConfigError("trainer.global_batch_size must be >= 1");
  if (trainer.mini_batch_size < 1) throw ConfigError("trainer.mini_batch_size must be >= 1");
}

Json to_json(const PipelineConfig& c, bool redact) {
  Json j;
  j["reward"] = Json{{"tau", c.reward.tau},
                     {"tolerance", c.reward.tolerance_T},
                     {"beta", c.reward.beta},
                     {"l_min", c.reward.l_min}};
  j["filter"] = Json{{"max_tokens", c.filter.max_tokens},
                     {"min_tokens", c.filter.min_tokens},
                     {"max_repeat_ngram", c.filter.max_repeat_ngram},
                     {"repeat_limit", c.filter.repeat_limit}};
  j["group_size"] = c.group_size;
  j["sampling"] = Json{{"temperature", c.sampling.temperature},
                       {"top_p", c.sampling.top_p},
                       {"max_tokens", c.sampling.max_tokens},
                       {"seed", c.sampling.seed}};
  j["synthesis"] = Json{{"temperature", c.synthesis.temperature},
                        {"top_p", c.synthesis.top_p},
                        {"max_tokens", c.synthesis.max_tokens},
                        {"seed", c.synthesis.seed}};
  j["backend"] = Json{{"kind", c.backend.kind},
                      {"endpoint", c.backend.endpoint},
                      {"model_name", c.backend.model_name},
                      {"ref_endpoint", c.backend.ref_endpoint},
                      {"ref_model_name", c.backend.ref_model_name},
                      {"api_key", redact && !c.backend.api_key.empty() ? "***" : c.backend.api_key},
                      {"timeout", c.backend.timeout},
                      {"retries", c.backend.retries},
                      {"backoff_ms", c.backend.backoff_ms},
                      {"max_in_flight", c.backend.max_in_flight}};
  j["mock"] = Json{{"seed", c.mock.seed},
                   {"mode", c.mock.mode},
                   {"base_prob", c.mock.base_prob},
                   {"low_prob", c.mock.low_prob},
                   {"low_prob_marker", c.mock.low_prob_marker},
                   {"max_markers", c.mock.max_markers},
                   {"report_logprobs", c.mock.report_logprobs},
                   {"fail_marker", c.mock.fail_marker}};
  j["tags"] = Json{{"open", c.tags.open}, {"close", c.tags.close}};
  j["trainer"] = Json{{"rl_learning_rate", c.trainer.rl_learning_rate},
                      {"kl_coef", c.trainer.kl_coef},
                      {"global_batch_size", c.trainer.global_batch_size},
                      {"mini_batch_size", c.trainer.mini_batch_size},
                      {"max_num_seqs", c.trainer.max_num_seqs},
                      {"sft_learning_rate", c.trainer.sft_learning_rate},
                      {"sft_epochs", c.trainer.sft_epochs}};
  return j;
}

PipelineConfig config_from_json(const Json& tree) {
  Json full = to_json(PipelineConfig{});
  merge_tree(full, tree, "");
  if (full["mock"]["seed"].is_null()) {
    if (full["backend"]["kind"] == "mock") throw ConfigError("mock.seed is required when backend.kind is mock");
    full["mock"]["seed"] = PipelineConfig{}.mock.seed;
  }

  PipelineConfig c;
  const Json& r = full["reward"];
  c.reward = {get_field<double>(r, "tau"), get_field<double>(r, "tolerance"), get_field<double>(r, "beta"),
              get_field<long long>(r, "l_min")};
  const Json& f = full["filter"];
  c.filter = {get_field<long long>(f, "max_tokens"), get_field<long long>(f, "min_tokens"),
              get_field<int>(f, "max_repeat_ngram"), get_field<int>(f, "repeat_limit")};
  c.group_size = full["group_size"].get<int>();
  const Json& s = full["sampling"];
  c.sampling = {get_field<double>(s, "temperature"), get_field<double>(s, "top_p"),
                get_field<long long>(s, "max_tokens"), get_field<std::uint64_t>(s, "seed")};
  const Json& y = full["synthesis"];
  c.synthesis = {get_field<double>(y, "temperature"), get_field<double>(y, "top_p"),
                 get_field<long long>(y, "max_tokens"), get_field<std::uint64_t>(y, "seed")};
  const Json& b = full["backend"];
  c.backend = {get_field<std::string>(b, "kind"),         get_field<std::string>(b, "endpoint"),
               get_field<std::string>(b, "model_name"),   get_field<std::string>(b, "ref_endpoint"),
               get_field<std::string>(b, "ref_model_name"), get_field<std::string>(b, "api_key"),
               get_field<double>(b, "timeout"),           get_field<int>(b, "retries"),
               get_field<int>(b, "backoff_ms"),           get_field<int>(b, "max_in_flight")};
  const Json& m = full["mock"];
  c.mock = {get_field<std::uint64_t>(m, "seed"),        get_field<std::string>(m, "mode"),
            get_field<double>(m, "base_prob"),          get_field<double>(m, "low_prob"),
            get_field<std::string>(m, "low_prob_marker"), get_field<int>(m, "max_markers"),
            get_field<bool>(m, "report_logprobs"),      get_field<std::string>(m, "fail_marker")};
  c.tags = {get_field<std::string>(full["tags"], "open"), get_field<std::string>(full["tags"], "close")};
  const Json& t = full["trainer"];
  c.trainer = {get_field<double>(t, "rl_learning_rate"), get_field<double>(t, "kl_coef"),
               get_field<long long>(t, "global_batch_size"), get_field<long long>(t, "mini_batch_size"),
               get_field<long long>(t, "max_num_seqs"),     get_field<double>(t, "sft_learning_rate"),
               get_field<long long>(t, "sft_epochs")};
  return c;
}

std::string env_var_for(const std::string& dotted_key) {
  std::string out(kEnvPrefix);
  for (char ch : dotted_key) {
    if (ch == '.')
      out += "__";
    else
      out += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  collect_keys(to_json(PipelineConfig{}), "", keys);
  return keys;
}

PipelineConfig resolve_config(const Json& file, const std::map<std::string, std::string>& env,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
  const Json defaults = to_json(PipelineConfig{});
  Json tree = defaults;
  if (!file.is_null()) merge_tree(tree, file, "");
  for (const auto& key : config_keys()) {
    if (auto it = env.find(env_var_for(key)); it != env.end()) set_key(tree, defaults, key, it->second);
  }
  for (const auto& [key, value] : overrides) set_key(tree, defaults, key, value);
  PipelineConfig cfg = config_from_json(tree);
  cfg.validate();
  return cfg;
}

Json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

std::map<std::string, std::string> config_environment() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    std::string_view entry(*e);
    if (!entry.starts_with(kEnvPrefix)) continue;
    std::size_t eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    out.emplace(std::string(entry.substr(0, eq)), std::string(entry.substr(eq + 1)));
  }
  return out;
}

BackendPair make_backends(const PipelineConfig& cfg) {
  if (cfg.backend.kind == "mock") {
    auto mock = std::make_shared<MockBackend>(cfg.mock);
    return {mock, mock};
  }
  HttpBackendConfig gen;
  gen.base_url = cfg.backend.endpoint;
  gen.model = cfg.backend.model_name;
  gen.api_key = cfg.backend.api_key;
  gen.timeout_s = cfg.backend.timeout;
  gen.retries = cfg.backend.retries;
  gen.backoff_ms = cfg.backend.backoff_ms;
  gen.max_in_flight = cfg.backend.max_in_flight;
  HttpBackendConfig ref = gen;
  if (!cfg.backend.ref_endpoint.empty()) ref.base_url = cfg.backend.ref_endpoint;
  if (!cfg.backend.ref_model_name.empty()) ref.model = cfg.backend.ref_model_name;
  return {std::make_shared<OpenAICompletionsClient>(gen), std::make_shared<OpenAICompletionsClient>(ref)};
}

}  // namespace dart
