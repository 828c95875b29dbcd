#ifndef MARGINLAB_RNG_HPP
#define MARGINLAB_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "marginlab/tensor.hpp"

namespace marginlab {

// The mt19937_64 engine output sequence is pinned by the standard; the
// std::*_distribution adapters are not, so all draws below are built from raw
// engine words to keep every reported number reproducible.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from (seed, stream).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s ^= 0x9E3779B97F4A7C15ull * (stream + 1);
  return a ^ splitmix64(s);
}

/// Uniform in [0, 1) with 53 random mantissa bits.
inline double uniform01(Rng& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

/// Standard normal via Box-Muller on explicit uniforms.
inline double gaussian(Rng& g) {
  double u1 = (static_cast<double>(g() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline std::uint64_t bounded(Rng& g, std::uint64_t n) { return g() % n; }

/// Fisher-Yates permutation of 0..n-1.
inline std::vector<Index> shuffled_indices(Index n, Rng& g) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (Index i = n - 1; i > 0; --i) {
    Index j = static_cast<Index>(bounded(g, static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

}  // namespace marginlab

#endif  // MARGINLAB_RNG_HPP
