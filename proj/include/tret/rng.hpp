#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace tret {

// splitmix64; the project-wide deterministic RNG. Bit-stable across
// platforms, unlike std::mt19937 distributions.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1), 53-bit mantissa.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [-1,1).
  double next_symmetric() { return 2.0 * next_unit() - 1.0; }

  // Uniform integer in [0, bound) via rejection-free modulo of a 64-bit
  // draw; bias is negligible for the bounds used here.
  std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }
};

constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffsetBasis) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                             std::uint64_t h = kFnvOffsetBasis) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

// Order-sensitive hash of an index sequence.
inline std::uint64_t hash_indices(std::span<const int> xs) {
  std::uint64_t h = kFnvOffsetBasis;
  for (int x : xs) {
    auto u = static_cast<std::uint64_t>(static_cast<std::uint32_t>(x));
    for (int shift = 0; shift < 32; shift += 8) {
      h ^= (u >> shift) & 0xffu;
      h *= kFnvPrime;
    }
  }
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  SplitMix64 rng(a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2)));
  return rng.next();
}

}  // namespace tret
