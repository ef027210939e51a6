#pragma once

#include <cstdint>

namespace rotorgw {

// Counter-based randomness. Every random quantity attached to a tree vertex
// is a pure function of (seed, path key, stream), so lazily grown trees are
// identical no matter in which order their vertices get materialized.

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform double in [0, 1) from the top 53 bits.
constexpr double unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

enum class Stream : std::uint64_t {
  kOffspring = 0x6f6666737072696eULL,
  kRotor = 0x726f746f72726f74ULL,
};

constexpr std::uint64_t root_key(std::uint64_t seed) noexcept {
  return splitmix64(seed ^ 0x5eed5eed5eed5eedULL);
}

// k is the 1-based planar index of the child.
constexpr std::uint64_t child_key(std::uint64_t parent_key, unsigned k) noexcept {
  return splitmix64(parent_key ^ (0xd1b54a32d192ed03ULL * (static_cast<std::uint64_t>(k) + 1)));
}

constexpr double keyed_uniform(std::uint64_t key, Stream stream) noexcept {
  return unit_interval(splitmix64(key ^ static_cast<std::uint64_t>(stream)));
}

}  // namespace rotorgw
