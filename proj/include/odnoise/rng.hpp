#pragma once

#include <cstdint>
#include <random>

namespace odnoise {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for an independent sub-stream: mix64(mix64(base ^ stream) + index).
/// Replicates and N values each get their own stream, so results do not depend
/// on the order in which they are evaluated.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) noexcept {
  return mix64(mix64(base ^ (stream * 0xD1B54A32D192ED03ULL)) + index);
}

namespace streams {
inline constexpr std::uint64_t reference = 1;
inline constexpr std::uint64_t replicate = 2;
}  // namespace streams

}  // namespace odnoise
