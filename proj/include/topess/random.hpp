#pragma once

#include <cstdint>
#include <random>

namespace topess {

/// All sampling uses the 64-bit Mersenne Twister.
using Rng = std::mt19937_64;

/// One SplitMix64 step (Steele, Lea and Flood 2014); advances `state`.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Independent seed for substream `stream` of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master;
  const std::uint64_t a = splitmix64(s);
  s = a ^ (stream * 0xD1B54A32D192ED03ull);
  return splitmix64(s);
}

}  // namespace topess
