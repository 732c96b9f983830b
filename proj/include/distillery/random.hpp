#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

#include "distillery/errors.hpp"

namespace distillery {

using Rng = std::mt19937_64;

// Stable sub-stream seeds: FNV-1a over (master, tag, index). Every consumer of
// randomness derives its own stream so that adding a stage never perturbs the
// draws of another.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix_u64 = [&h](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xffull;
      h *= 1099511628211ull;
    }
  };
  mix_u64(master);
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  mix_u64(index);
  return h;
}

// Uniform in [0, 1), 53 random bits. Hand-rolled so results do not depend on
// the standard library's distribution implementations.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform_real(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw UsageError("uniform_index: empty range");
  std::size_t i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

// Inverse-CDF draw. A probability-one bucket is always hit regardless of seed.
inline std::size_t sample_discrete(Rng& rng, const std::vector<double>& probs) {
  double u = uniform01(rng);
  double cum = 0.0;
  std::size_t last = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cum += probs[i];
    last = i;
    if (u < cum) return i;
  }
  if (last == probs.size()) throw UsageError("sample_discrete: no positive mass");
  return last;  // u fell into rounding slack past the final bucket
}

inline void shuffle_indices(Rng& rng, std::vector<std::size_t>& idx) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(idx[i - 1], idx[j]);
  }
}

inline std::vector<std::size_t> shuffled_iota(Rng& rng, std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  shuffle_indices(rng, idx);
  return idx;
}

// First k entries of a seeded permutation of [0, n).
inline std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n,
                                                           std::size_t k) {
  if (k > n) throw UsageError("sample_without_replacement: k > n");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + uniform_index(rng, n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace distillery
