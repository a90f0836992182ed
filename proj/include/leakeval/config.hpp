#pragma once

#include <map>
#include <string>

namespace leakeval {

/// Plain-text `key = value` config. '#' starts a comment; blank lines are
/// skipped. Keys are unique.
using KvMap = std::map<std::string, std::string>;

KvMap parse_kv_config(const std::string& text);
KvMap load_kv_config(const std::string& path);

/// Sorted `key=value` lines; input to the config hash embedded in artifacts.
std::string canonical_kv_string(const KvMap& kv);

// Typed accessors with defaults; throw ConfigError on unparseable values.
std::string kv_get(const KvMap& kv, const std::string& key, const std::string& fallback);
double kv_get_double(const KvMap& kv, const std::string& key, double fallback);
long long kv_get_int(const KvMap& kv, const std::string& key, long long fallback);
bool kv_get_bool(const KvMap& kv, const std::string& key, bool fallback);

}  // namespace leakeval
