#include "dart/http_backend.hpp"

#include "dart/dataset.hpp"
#include "dart/errors.hpp"

#include "httplib.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <semaphore>
#include <thread>

namespace dart {

namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path_prefix;
};

ParsedUrl split_url(const std::string& url) {
  std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("backend URL needs a scheme: '" + url + "'");
  std::size_t path_start = url.find('/', scheme_end + 3);
  ParsedUrl p;
  p.scheme_host_port = url.substr(0, path_start);
  p.path_prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!p.path_prefix.empty() && p.path_prefix.back() == '/') p.path_prefix.pop_back();
  return p;
}

/// RAII slot in the in-flight limiter.
class InFlightSlot {
 public:
  explicit InFlightSlot(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
  ~InFlightSlot() { sem_.release(); }
  InFlightSlot(const InFlightSlot&) = delete;
  InFlightSlot& operator=(const InFlightSlot&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

bool mentions_logprob_support(const std::string& body) {
  return body.find("echo") != std::string::npos || body.find("logprobs") != std::string::npos;
}

const Json& require(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ProtocolError(std::string("response is missing '") + key + "'");
  return *it;
}

}  // namespace

struct OpenAICompletionsClient::Impl {
  HttpBackendConfig cfg;
  ParsedUrl url;
  mutable std::counting_semaphore<> in_flight;

  explicit Impl(HttpBackendConfig c)
      : cfg(std::move(c)), url(split_url(cfg.base_url)), in_flight(std::max(1, cfg.max_in_flight)) {}

  Json post_completions(const Json& body) const {
    const std::string path = url.path_prefix + "/completions";
    const std::string payload = body.dump();
    httplib::Headers headers;
    if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

    std::string last_cause;
    const int attempts = std::max(0, cfg.retries) + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
      if (attempt > 0) {
        auto delay = std::chrono::milliseconds(static_cast<long long>(cfg.backoff_ms) << (attempt - 1));
        std::this_thread::sleep_for(delay);
      }
      httplib::Client client(url.scheme_host_port);
      auto timeout = std::chrono::duration<double>(cfg.timeout_s);
      client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

      httplib::Result res;
      {
        InFlightSlot slot(in_flight);
        res = client.Post(path, headers, payload, "application/json");
      }
      if (!res) {
        last_cause = "transport error: " + httplib::to_string(res.error());
        spdlog::warn("POST {}{} attempt {}/{} failed: {}", url.scheme_host_port, path, attempt + 1, attempts,
                     last_cause);
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_cause = "HTTP " + std::to_string(res->status);
        spdlog::warn("POST {}{} attempt {}/{} failed: {}", url.scheme_host_port, path, attempt + 1, attempts,
                     last_cause);
        continue;
      }
      if (res->status < 200 || res->status >= 300) {
        if ((res->status == 400 || res->status == 422) && body.contains("echo") && mentions_logprob_support(res->body))
          throw CapabilityError("server rejected echo/logprobs scoring: " + res->body);
        throw BackendError("HTTP " + std::to_string(res->status) + " from " + url.scheme_host_port + path + ": " +
                           res->body);
      }
      try {
        return Json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw ProtocolError(std::string("response is not JSON: ") + e.what());
      }
    }
    throw BackendError("request to " + url.scheme_host_port + path + " failed after " + std::to_string(attempts) +
                       " attempts: " + last_cause);
  }
};

OpenAICompletionsClient::OpenAICompletionsClient(HttpBackendConfig cfg)
    : impl_(std::make_unique<Impl>(std::move(cfg))) {}

OpenAICompletionsClient::~OpenAICompletionsClient() = default;

std::vector<Completion> OpenAICompletionsClient::generate(const GenerationRequest& req) const {
  req.validate();
  Json body{{"model", impl_->cfg.model},     {"prompt", req.prompt},   {"max_tokens", req.max_tokens},
            {"temperature", req.temperature}, {"top_p", req.top_p},     {"n", req.n}};
  if (req.seed) body["seed"] = *req.seed;
  if (req.logprobs) body["logprobs"] = 1;
  spdlog::debug("generate: url={} model={} temperature={} top_p={} max_tokens={} n={} seed={} auth={}",
                impl_->cfg.base_url, impl_->cfg.model, req.temperature, req.top_p, req.max_tokens, req.n,
                req.seed ? std::to_string(*req.seed) : "none", impl_->cfg.api_key.empty() ? "none" : "Bearer ***");

  Json resp = impl_->post_completions(body);
  const Json& choices = require(resp, "choices");
  if (!choices.is_array() || choices.size() != static_cast<std::size_t>(req.n))
    throw ProtocolError("expected " + std::to_string(req.n) + " choices");

  std::vector<std::pair<long long, Completion>> indexed;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    const Json& ch = choices[i];
    const Json& text = require(ch, "text");
    if (!text.is_string()) throw ProtocolError("choice text is not a string");
    Completion c;
    c.text = text.get<std::string>();
    if (auto lp = ch.find("logprobs"); lp != ch.end() && lp->is_object()) {
      const Json& tokens = require(*lp, "tokens");
      const Json& logprobs = require(*lp, "token_logprobs");
      if (!tokens.is_array() || !logprobs.is_array() || tokens.size() != logprobs.size())
        throw ProtocolError("logprobs arrays are malformed");
      std::vector<TokenScore> scores;
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (!logprobs[t].is_number()) throw ProtocolError("null logprob for a generated token");
        scores.push_back({tokens[t].get<std::string>(), prob_from_logprob(logprobs[t].get<double>()),
                          static_cast<long long>(t + 1)});
      }
      c.logprobs = std::move(scores);
    }
    long long index = ch.contains("index") && ch["index"].is_number_integer() ? ch["index"].get<long long>()
                                                                               : static_cast<long long>(i);
    indexed.emplace_back(index, std::move(c));
  }
  std::stable_sort(indexed.begin(), indexed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Completion> out;
  for (auto& [_, c] : indexed) out.push_back(std::move(c));
  return out;
}

std::vector<TokenScore> OpenAICompletionsClient::score_tokens(const ScoreRequest& req) const {
  req.validate();
  const std::string full = req.prompt + req.completion;
  Json body{{"model", impl_->cfg.model}, {"prompt", full},   {"max_tokens", 1},
            {"temperature", 0.0},       {"echo", true},      {"logprobs", 0}};
  spdlog::debug("score_tokens: url={} model={} prompt_chars={} completion_chars={} auth={}", impl_->cfg.base_url,
                impl_->cfg.model, req.prompt.size(), req.completion.size(),
                impl_->cfg.api_key.empty() ? "none" : "Bearer ***");

  Json resp = impl_->post_completions(body);
  const Json& choices = require(resp, "choices");
  if (!choices.is_array() || choices.empty()) throw ProtocolError("response has no choices");
  auto lp = choices[0].find("logprobs");
  if (lp == choices[0].end() || !lp->is_object())
    throw CapabilityError("scoring backend does not return logprobs");
  auto tokens_it = lp->find("tokens");
  auto logprobs_it = lp->find("token_logprobs");
  if (tokens_it == lp->end() || logprobs_it == lp->end())
    throw CapabilityError("scoring backend does not return token logprobs");
  const Json& tokens = *tokens_it;
  const Json& logprobs = *logprobs_it;
  if (!tokens.is_array() || !logprobs.is_array() || tokens.size() != logprobs.size())
    throw ProtocolError("logprobs arrays are malformed");

  // Walk the echoed tokens, keeping those that overlap [prompt.size(), full.size()).
  std::vector<TokenScore> scores;
  std::size_t offset = 0;
  for (std::size_t t = 0; t < tokens.size() && offset < full.size(); ++t) {
    if (!tokens[t].is_string()) throw ProtocolError("token is not a string");
    const std::string& tok = tokens[t].get_ref<const std::string&>();
    std::size_t end = offset + tok.size();
    if (end > req.prompt.size()) {
      if (!logprobs[t].is_number()) throw ProtocolError("null logprob for a completion token");
      scores.push_back({tok, prob_from_logprob(logprobs[t].get<double>()), static_cast<long long>(scores.size() + 1)});
    }
    offset = end;
  }
  if (offset < full.size()) throw CapabilityError("scoring backend did not echo the prompt tokens");
  if (scores.empty()) throw ProtocolError("no completion tokens in the echoed response");
  return scores;
}

}  // namespace dart
