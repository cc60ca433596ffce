#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace cloze {

// std::uniform_int_distribution and std::shuffle are implementation-defined,
// so generated item streams would differ across standard libraries. These
// helpers only rely on the exactly-specified mt19937_64 output sequence.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Mixes any number of integers into one seed.
template <typename... Ts>
std::uint64_t mix_seed(std::uint64_t seed, Ts... parts) {
  std::uint64_t h = splitmix64(seed);
  ((h = splitmix64(h ^ static_cast<std::uint64_t>(parts))), ...);
  return h;
}

/// Uniform integer in [0, n) by rejection sampling. n must be > 0.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Fisher-Yates.
template <typename T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
  }
}

/// k distinct indices of [0, n), ascending, each k-subset equally likely
/// (selection sampling).
inline std::vector<std::uint64_t> sample_sorted(std::uint64_t n, std::uint64_t k,
                                                std::mt19937_64& rng) {
  std::vector<std::uint64_t> out;
  if (k >= n) {
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  out.reserve(k);
  for (std::uint64_t i = 0; i < n && out.size() < k; ++i) {
    if (uniform_index(rng, n - i) < k - out.size()) out.push_back(i);
  }
  return out;
}

}  // namespace cloze
