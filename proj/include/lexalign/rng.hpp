#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lexalign {

using Rng = std::mt19937_64;

// Derives an independent seed for a named sub-stream ("init", "sampling",
// "synth", ...) so each pipeline stage is reproducible on its own.
inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  // splitmix64 finalizer
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_stream(std::uint64_t seed, std::string_view stream) {
  return Rng(stream_seed(seed, stream));
}

}  // namespace lexalign
