#pragma once

#include <cstdint>
#include <random>

namespace gtgan {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent child seed for stream `index` of `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Named sub-stream (e.g. "translator init" vs "discriminator init").
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t salt) {
  return derive_seed(derive_seed(seed, salt), index);
}

}  // namespace gtgan
