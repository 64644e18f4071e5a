#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "agm/types.hpp"

namespace agm {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t kDefaultSeed = 20190417;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for work item `index` of a run seeded with `seed`.
/// Substreams depend only on (seed, index), never on scheduling.
inline Rng substream(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
inline Complex complex_normal(Rng& rng, double variance = 1.0) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

inline double real_normal(Rng& rng, double stddev = 1.0) {
  std::normal_distribution<double> normal(0.0, stddev);
  return normal(rng);
}

/// Matrix of i.i.d. complex Gaussian entries with E|z|^2 = variance.
inline Matrix complex_gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                                      double variance = 1.0) {
  Matrix out(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = complex_normal(rng, variance);
  return out;
}

}  // namespace agm
