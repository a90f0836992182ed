#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "leakeval/config.hpp"

namespace leakeval {

struct ModelEndpoint {
  std::string base_url;
  std::string model_name;
  std::string api_key_env = "LLM_API_KEY";
  double temperature = 0.0;  // deterministic by default
  int max_tokens = 1024;
  std::chrono::seconds timeout{60};
};

struct ClientConfig {
  ModelEndpoint endpoint;
  std::string cache_dir = "llm_cache";
  double requests_per_second = 0.0;  // 0 = unlimited
  int max_attempts = 5;
  int backoff_base_ms = 1000;
  bool replay_only = false;
};

/// Reads the endpoint/cache keys (base_url, model_name, api_key_env,
/// temperature, max_tokens, timeout_s, requests_per_second, max_attempts,
/// backoff_base_ms, cache_dir, replay_only) out of a key-value config.
ClientConfig client_config_from_kv(const KvMap& kv);

/// Anything that can answer a prompt with text. LlmClient is the HTTP-backed
/// implementation; tests substitute scripted sources.
class CompletionSource {
 public:
  virtual ~CompletionSource() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Spaces out calls so the request rate never exceeds the configured
/// ceiling. One instance is shared by every caller of an endpoint.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second);
  void acquire();

 private:
  std::chrono::steady_clock::duration interval_{};
  std::chrono::steady_clock::time_point next_slot_;
  std::mutex mutex_;
};

/// Chat-completion client with retries, rate limiting, and a persistent
/// content-addressed response cache. A warm cache makes every pipeline
/// bit-reproducible offline; replay_only mode turns a cache miss into a
/// MissingFixtureError instead of a network call.
class LlmClient : public CompletionSource {
 public:
  explicit LlmClient(ClientConfig config);

  /// Cache first; on miss issues one chat-completion request, retrying
  /// transient failures (connect errors, 408/429/5xx) with jittered
  /// exponential backoff. The response is cached before returning.
  std::string complete(const std::string& prompt) override;

  /// Content address of (model_name, prompt, temperature, max_tokens).
  std::string cache_key(const std::string& prompt) const;

  /// Cache file path for a key: <cache_dir>/<first-2-hex>/<key>.json.
  std::string cache_path(const std::string& key) const;

  /// Writes a response into the cache without any network involvement.
  /// This is how replay fixtures are recorded for offline runs.
  void seed_cache_entry(const std::string& prompt, const std::string& response_text);

  const ClientConfig& config() const { return config_; }

  /// Requests actually sent over the network (cache misses), for tests.
  std::size_t network_requests() const { return network_requests_.load(); }

 private:
  std::string fetch_from_network(const std::string& prompt);
  void store_cache_entry(const std::string& key, const std::string& prompt,
                         const std::string& response_text, const std::string& usage_json);

  ClientConfig config_;
  RateLimiter limiter_;
  std::atomic<std::size_t> network_requests_{0};
};

/// Asks for k numbered paraphrases of a passage that keep every fact and do
/// not quote it verbatim, then splits the response on the numbered-list
/// pattern. Returns up to k candidates; throws FormatError when not even one
/// can be parsed.
std::vector<std::string> paraphrase(CompletionSource& model, const std::string& passage,
                                    std::size_t k);

/// Splits "1. ...\n2. ..." style responses into items; tolerant of "1)" and
/// of continuation lines, which are folded into the current item.
std::vector<std::string> parse_numbered_list(const std::string& response, std::size_t k);

}  // namespace leakeval
