#include "leakeval/config.hpp"

#include <charconv>

#include "leakeval/errors.hpp"
#include "leakeval/text_util.hpp"
#include "leakeval/trec_io.hpp"

namespace leakeval {

KvMap parse_kv_config(const std::string& text) {
  KvMap kv;
  const std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(i + 1) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(i + 1) + ": empty key");
    }
    if (!kv.emplace(key, value).second) {
      throw ConfigError("config line " + std::to_string(i + 1) + ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

KvMap load_kv_config(const std::string& path) {
  try {
    return parse_kv_config(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string canonical_kv_string(const KvMap& kv) {
  std::string out;
  for (const auto& [key, value] : kv) {
    out += key + "=" + value + "\n";
  }
  return out;
}

std::string kv_get(const KvMap& kv, const std::string& key, const std::string& fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

double kv_get_double(const KvMap& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  double value = 0.0;
  auto res = std::from_chars(it->second.data(), it->second.data() + it->second.size(), value);
  if (res.ec != std::errc() || res.ptr != it->second.data() + it->second.size()) {
    throw ConfigError("config key '" + key + "': invalid number '" + it->second + "'");
  }
  return value;
}

long long kv_get_int(const KvMap& kv, const std::string& key, long long fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  long long value = 0;
  auto res = std::from_chars(it->second.data(), it->second.data() + it->second.size(), value);
  if (res.ec != std::errc() || res.ptr != it->second.data() + it->second.size()) {
    throw ConfigError("config key '" + key + "': invalid integer '" + it->second + "'");
  }
  return value;
}

bool kv_get_bool(const KvMap& kv, const std::string& key, bool fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  const std::string v = lower_copy(it->second);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': invalid boolean '" + it->second + "'");
}

}  // namespace leakeval
