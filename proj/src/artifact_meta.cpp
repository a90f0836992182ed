#include "leakeval/artifact_meta.hpp"

#include <cstdlib>
#include <ctime>

#include "leakeval/version.hpp"

namespace leakeval {

std::string now_iso8601() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ArtifactMeta make_artifact_meta(std::uint64_t seed, const std::string& config_hash) {
  return {kVersion, seed, config_hash, now_iso8601()};
}

nlohmann::json artifact_meta_json(const ArtifactMeta& meta) {
  return nlohmann::json{{"toolkit_version", meta.toolkit_version},
                        {"seed", meta.seed},
                        {"config_hash", meta.config_hash},
                        {"created_at", meta.created_at}};
}

}  // namespace leakeval
