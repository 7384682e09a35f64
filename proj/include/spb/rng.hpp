#pragma once

#include <cstdint>

namespace spb {

inline constexpr const char* kGeneratorId = "splitmix64-counter-v1";

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based stream: the draw for (seed, stream, index) depends on nothing
// else, so element order and worker layout never change a sample.
inline constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t index,
                                            std::uint64_t stream = 0) {
  return mix64(mix64(seed ^ mix64(stream)) ^ index);
}

// Uniform in [0, 1) with 53 random bits.
inline constexpr double counter_uniform(std::uint64_t seed, std::uint64_t index,
                                        std::uint64_t stream = 0) {
  return static_cast<double>(counter_hash(seed, index, stream) >> 11) * 0x1.0p-53;
}

}  // namespace spb
