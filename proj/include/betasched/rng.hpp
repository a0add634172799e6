#pragma once

#include <cstdint>
#include <random>

namespace betasched {

/// Independent random streams derived from one user-facing seed. Every
/// consumer of randomness gets its own stream id so that, e.g., initial noise
/// and projection directions never share a sequence.
enum class Stream : std::uint32_t {
  kInitialNoise = 1,
  kReferenceSamples = 2,
  kProjections = 3,
  kProbes = 4,
};

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

} // namespace betasched
