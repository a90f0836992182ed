#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace leakeval {

/// Provenance block embedded in every output artifact. Re-running with
/// identical inputs reproduces everything byte-for-byte except created_at,
/// which lives in this separate field (and is pinned by SOURCE_DATE_EPOCH
/// when that is set, the usual reproducible-build convention).
struct ArtifactMeta {
  std::string toolkit_version;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string created_at;
};

ArtifactMeta make_artifact_meta(std::uint64_t seed, const std::string& config_hash);

nlohmann::json artifact_meta_json(const ArtifactMeta& meta);

/// UTC ISO-8601 timestamp; honors SOURCE_DATE_EPOCH.
std::string now_iso8601();

}  // namespace leakeval
