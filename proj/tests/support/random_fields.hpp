#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "fracwave/field.hpp"

namespace fracwave::testing {

/// Smooth random field: sum of modes |j| <= band with amplitude 1/(1+j)^2
/// and random phases, sampled directly on the grid.
inline RealField smooth_random_field(const Grid& g, std::uint64_t seed, long band) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double mean = unit(rng);
  RealField u = constant_field(g, mean);
  for (long j = 1; j <= band; ++j) {
    const double amp = 1.0 / std::pow(1.0 + static_cast<double>(j), 2.0);
    const double ph = phase(rng);
    const double k = 2.0 * std::numbers::pi * static_cast<double>(j) / g.length();
    for (std::size_t m = 0; m < g.size(); ++m) u[m] += 2.0 * amp * std::cos(k * g.x(m) + ph);
  }
  return u;
}

/// Independent uniform values at every grid point.
inline RealField white_noise_field(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  RealField u(g);
  for (auto& v : u.values()) v = unit(rng);
  return u;
}

}  // namespace fracwave::testing
