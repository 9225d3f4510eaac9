#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace riskprop {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a base seed and a stream label.
/// Mixes an FNV-1a hash of the label into the base with a splitmix64 finalizer.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (h | 1ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t base, std::string_view stream) {
  return Rng(derive_seed(base, stream));
}

}  // namespace riskprop
