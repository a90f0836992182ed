#pragma once

#include <cstdint>
#include <string_view>

namespace leakeval {

/// Portable pseudo-random generator (splitmix64). All sampling in the toolkit
/// goes through this class so that a fixed seed yields bit-identical results
/// on every platform; std::uniform_int_distribution is implementation-defined
/// and is deliberately not used.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Rejection-sampled, so the result is exactly
  /// uniform and reproducible across platforms. n must be > 0.
  std::uint64_t bounded(std::uint64_t n) {
    const std::uint64_t threshold = (~n + 1) % n;  // (2^64 - n) mod n
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

 private:
  std::uint64_t state_;
};

/// Derives an independent child seed from (seed, index). Used to give each
/// bootstrap replicate / parallel worker its own stream: mixing through one
/// splitmix64 step decorrelates nearby indices.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 mixer(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
  return mixer.next();
}

/// String-keyed variant (per-topic streams): FNV-1a over the key, then mixed
/// with the seed as above.
inline std::uint64_t derive_stream(std::uint64_t seed, std::string_view key) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_stream(seed, h);
}

}  // namespace leakeval
