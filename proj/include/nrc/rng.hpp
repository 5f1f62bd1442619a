#pragma once

#include <cstdint>

namespace nrc {

/// SplitMix64. Counter-based, fully specified, identical on every platform;
/// this is the only randomness source used for dataset sampling, so splits
/// are reproducible from (seed, trial, class) alone.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Draw from [0, n) as floor(next()/2^64 * n), computed with a 128-bit
  /// multiply. No floating point, no rejection loop.
  std::uint64_t bounded(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }
};

/// SplitMix64 finalizer applied to a bare word.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Seed of the per-(seed, trial, class) sampling stream:
///   mix64(mix64(seed + G*(trial+1)) + C*(class_value+1))
/// with G = 0x9E3779B97F4A7C15 and C = 0xC2B2AE3D27D4EB4F.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t trial,
                                 std::int64_t class_value) {
  const std::uint64_t g = 0x9E3779B97F4A7C15ull;
  const std::uint64_t c = 0xC2B2AE3D27D4EB4Full;
  return mix64(mix64(seed + g * (trial + 1)) +
               c * (static_cast<std::uint64_t>(class_value) + 1));
}

}  // namespace nrc
