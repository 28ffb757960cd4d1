#pragma once

#include <cstdint>
#include <random>

namespace onlab {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream per (base, step, example, purpose) so per-example work can
// run in any order and still draw the same numbers.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return splitmix64(h ^ c);
}

enum class SeedPurpose : std::uint64_t {
  AttackInit = 1,
  PowerInit = 2,
  Shuffle = 3,
  Restart = 4,
  Probe = 5,
  Noise = 6,
};

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t step, std::uint64_t example,
                                 SeedPurpose purpose) {
  return derive_seed(base, step, example, static_cast<std::uint64_t>(purpose));
}

}  // namespace onlab
