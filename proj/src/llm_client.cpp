#include "leakeval/llm_client.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "leakeval/artifact_meta.hpp"
#include "leakeval/errors.hpp"
#include "leakeval/hashing.hpp"
#include "leakeval/text_util.hpp"
#include "leakeval/trec_io.hpp"

namespace leakeval {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix, no trailing slash
};

SplitUrl split_base_url(const std::string& base_url) {
  const std::size_t scheme = base_url.find("://");
  if (scheme == std::string::npos) {
    throw ConfigError("base_url must include a scheme: '" + base_url + "'");
  }
  const std::size_t slash = base_url.find('/', scheme + 3);
  SplitUrl out;
  if (slash == std::string::npos) {
    out.origin = base_url;
  } else {
    out.origin = base_url.substr(0, slash);
    out.prefix = base_url.substr(slash);
  }
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

bool retryable_status(int status) {
  return status == 408 || status == 429 || status >= 500;
}

}  // namespace

ClientConfig client_config_from_kv(const KvMap& kv) {
  ClientConfig cfg;
  cfg.endpoint.base_url = kv_get(kv, "base_url", "");
  cfg.endpoint.model_name = kv_get(kv, "model_name", "");
  cfg.endpoint.api_key_env = kv_get(kv, "api_key_env", cfg.endpoint.api_key_env);
  cfg.endpoint.temperature = kv_get_double(kv, "temperature", cfg.endpoint.temperature);
  cfg.endpoint.max_tokens = static_cast<int>(kv_get_int(kv, "max_tokens", cfg.endpoint.max_tokens));
  cfg.endpoint.timeout = std::chrono::seconds(kv_get_int(kv, "timeout_s", cfg.endpoint.timeout.count()));
  cfg.cache_dir = kv_get(kv, "cache_dir", cfg.cache_dir);
  cfg.requests_per_second = kv_get_double(kv, "requests_per_second", cfg.requests_per_second);
  cfg.max_attempts = static_cast<int>(kv_get_int(kv, "max_attempts", cfg.max_attempts));
  cfg.backoff_base_ms = static_cast<int>(kv_get_int(kv, "backoff_base_ms", cfg.backoff_base_ms));
  cfg.replay_only = kv_get_bool(kv, "replay_only", cfg.replay_only);
  return cfg;
}

RateLimiter::RateLimiter(double requests_per_second) {
  if (requests_per_second > 0.0) {
    interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / requests_per_second));
  }
  next_slot_ = std::chrono::steady_clock::now();
}

void RateLimiter::acquire() {
  if (interval_.count() == 0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

LlmClient::LlmClient(ClientConfig config)
    : config_(std::move(config)), limiter_(config_.requests_per_second) {
  if (config_.endpoint.model_name.empty()) throw ConfigError("model_name is required");
  if (!config_.replay_only && config_.endpoint.base_url.empty()) {
    throw ConfigError("base_url is required unless replay_only is set");
  }
  fs::create_directories(config_.cache_dir);
}

std::string LlmClient::cache_key(const std::string& prompt) const {
  // \x1f separators keep (model, prompt, params) unambiguous.
  std::string material = config_.endpoint.model_name;
  material.push_back('\x1f');
  material += prompt;
  material.push_back('\x1f');
  material += format_double(config_.endpoint.temperature);
  material.push_back('\x1f');
  material += std::to_string(config_.endpoint.max_tokens);
  return sha256_hex(material);
}

std::string LlmClient::cache_path(const std::string& key) const {
  return (fs::path(config_.cache_dir) / key.substr(0, 2) / (key + ".json")).string();
}

void LlmClient::seed_cache_entry(const std::string& prompt, const std::string& response_text) {
  store_cache_entry(cache_key(prompt), prompt, response_text, "null");
}

std::string LlmClient::complete(const std::string& prompt) {
  const std::string key = cache_key(prompt);
  const std::string path = cache_path(key);
  if (fs::exists(path)) {
    const json entry = json::parse(read_file(path));
    return entry.at("response_text").get<std::string>();
  }
  if (config_.replay_only) {
    throw MissingFixtureError("replay-only mode: no cached response for key " + key, key);
  }
  return fetch_from_network(prompt);
}

std::string LlmClient::fetch_from_network(const std::string& prompt) {
  const char* api_key = std::getenv(config_.endpoint.api_key_env.c_str());
  if (api_key == nullptr || *api_key == '\0') {
    throw ConfigError("API key environment variable '" + config_.endpoint.api_key_env +
                      "' is not set");
  }

  const SplitUrl url = split_base_url(config_.endpoint.base_url);
  const json body{{"model", config_.endpoint.model_name},
                  {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                  {"temperature", config_.endpoint.temperature},
                  {"max_tokens", config_.endpoint.max_tokens}};
  const std::string body_text = body.dump(-1, ' ', false, json::error_handler_t::replace);

  thread_local std::mt19937_64 jitter_rng{std::random_device{}()};
  std::string last_failure = "no attempt made";

  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) {
      const double jitter =
          0.75 + 0.5 * std::uniform_real_distribution<double>(0.0, 1.0)(jitter_rng);
      const double delay_ms = config_.backoff_base_ms * std::pow(2.0, attempt - 2) * jitter;
      std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long>(delay_ms)));
    }
    limiter_.acquire();

    httplib::Client http(url.origin);
    http.set_connection_timeout(config_.endpoint.timeout.count(), 0);
    http.set_read_timeout(config_.endpoint.timeout.count(), 0);
    http.set_write_timeout(config_.endpoint.timeout.count(), 0);
    httplib::Headers headers{{"Authorization", std::string("Bearer ") + api_key}};

    network_requests_.fetch_add(1);
    httplib::Result res =
        http.Post(url.prefix + "/chat/completions", headers, body_text, "application/json");

    if (!res) {
      last_failure = "connection error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_failure = "HTTP " + std::to_string(res->status) + ": " +
                     res->body.substr(0, std::min<std::size_t>(res->body.size(), 300));
      if (retryable_status(res->status)) continue;
      throw TransportError("chat completion failed (" + last_failure + ")");
    }

    json payload = json::parse(res->body, nullptr, false);
    if (payload.is_discarded() || !payload.contains("choices") || payload["choices"].empty() ||
        !payload["choices"][0].contains("message") ||
        !payload["choices"][0]["message"].contains("content")) {
      throw FormatError("chat completion response missing choices[0].message.content", res->body);
    }
    const std::string text = payload["choices"][0]["message"]["content"].get<std::string>();
    const std::string usage =
        payload.contains("usage") ? payload["usage"].dump() : std::string("null");
    store_cache_entry(cache_key(prompt), prompt, text, usage);
    return text;
  }
  throw TransportError("chat completion failed after " + std::to_string(config_.max_attempts) +
                       " attempts (last: " + last_failure + ")");
}

void LlmClient::store_cache_entry(const std::string& key, const std::string& prompt,
                                  const std::string& response_text, const std::string& usage_json) {
  json entry{{"key", key},
             {"model_name", config_.endpoint.model_name},
             {"prompt", sanitize_utf8(prompt)},
             {"temperature", config_.endpoint.temperature},
             {"max_tokens", config_.endpoint.max_tokens},
             {"response_text", sanitize_utf8(response_text)},
             {"token_usage", json::parse(usage_json, nullptr, false)},
             {"created_at", now_iso8601()}};
  const fs::path path = cache_path(key);
  fs::create_directories(path.parent_path());
  // write-temp-then-rename keeps concurrent writers from leaving torn files
  const fs::path tmp = path.string() + ".tmp." + std::to_string(
      std::hash<std::thread::id>{}(std::this_thread::get_id()));
  write_file(tmp.string(), entry.dump(2) + "\n");
  fs::rename(tmp, path);
}

std::vector<std::string> parse_numbered_list(const std::string& response, std::size_t k) {
  std::vector<std::string> items;
  std::string current;
  bool in_item = false;
  for (const std::string& raw_line : split_lines(response)) {
    const std::string line = trim(raw_line);
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    const bool numbered = i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')');
    if (numbered) {
      if (in_item && !trim(current).empty()) items.push_back(trim(current));
      current = line.substr(i + 1);
      in_item = true;
    } else if (in_item) {
      current += "\n" + line;
    }
  }
  if (in_item && !trim(current).empty()) items.push_back(trim(current));
  if (items.size() > k) items.resize(k);
  return items;
}

std::vector<std::string> paraphrase(CompletionSource& model, const std::string& passage,
                                    std::size_t k) {
  if (trim(passage).empty()) throw Error("cannot paraphrase an empty passage");
  std::string prompt =
      "Rewrite the passage below " + std::to_string(k) +
      " times. Every rewrite must convey exactly the same factual content as the passage: do not "
      "add information, do not remove information, and do not copy any sentence verbatim. Use "
      "different wording and sentence structure each time.\n\n"
      "Reply with exactly " + std::to_string(k) +
      " numbered lines, \"1.\" through \"" + std::to_string(k) + ".\", one rewrite per line.\n\n"
      "Passage:\n" + passage;
  const std::string response = model.complete(prompt);
  std::vector<std::string> items = parse_numbered_list(response, k);
  if (items.empty()) {
    throw FormatError("paraphrase response contained no numbered items", response);
  }
  return items;
}

}  // namespace leakeval
