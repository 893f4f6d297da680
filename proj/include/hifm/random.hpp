#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace hifm {

using Rng = std::mt19937_64;

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline void fill_standard_normal(Rng& rng, std::span<double> out) {
  std::normal_distribution<double> dist(0.0, 1.0);
  for (double& x : out) x = dist(rng);
}

}  // namespace hifm
