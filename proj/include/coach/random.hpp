#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include <Eigen/Core>

namespace coach {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits, identical on every
/// standard library (unlike std::uniform_real_distribution).
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Draws i with probability w_i / sum(w). Throws std::invalid_argument for
/// negative, non-finite, or all-zero weights.
template <class Derived>
int sample_categorical(const Eigen::DenseBase<Derived>& weights, Rng& rng) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    const double w = weights(i);
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("sample_categorical: weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("sample_categorical: weights sum to zero");
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  int last_positive = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) <= 0.0) continue;
    acc += weights(i);
    last_positive = static_cast<int>(i);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

inline bool bernoulli(double p, Rng& rng) { return uniform01(rng) < p; }

/// Seed for a sub-stream (e.g. one rollout) derived from a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace coach
