#pragma once

#include <cstdint>
#include <random>

namespace sopbound {

using Rng = std::mt19937_64;

// Independent stream for partition `stream` of a run seeded with `seed`.
// Streams are derived through a seed sequence so neighbouring counters do
// not produce correlated engines.
inline Rng derive_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5eedu};
  return Rng(seq);
}

inline Rng make_rng(std::uint64_t seed) { return derive_stream(seed, 0); }

}  // namespace sopbound
