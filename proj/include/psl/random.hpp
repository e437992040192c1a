#pragma once

#include <cstdint>

namespace psl {

// SplitMix64 step. Used to derive independent, platform-stable seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed of the stream with the given counter under a master seed.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t counter) {
  std::uint64_t state = master ^ (0xd1b54a32d192ed03ULL * (counter + 1));
  splitmix64(state);
  return splitmix64(state);
}

// Uniform double in [0, 1) with 53 random bits.
inline double splitmix_unit(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

}  // namespace psl
