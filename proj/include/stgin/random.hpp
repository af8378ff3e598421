#pragma once

#include <cstdint>
#include <random>

#include "stgin/tensor.hpp"

// Distributions written out by hand: the standard library's are allowed to
// differ between implementations, and seeded outputs here must not.
namespace stgin::random {

using Engine = std::mt19937_64;

/// Uniform on the open interval (0, 1).
inline double uniform01(Engine& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform(Engine& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

double normal(Engine& rng);

/// Index in [0, n) by rejection, unbiased.
std::uint64_t below(Engine& rng, std::uint64_t n);

/// Weights uniform in (−√(1/fan_in), +√(1/fan_in)).
Tensor fan_in_uniform(Engine& rng, Shape shape, std::size_t fan_in);

}  // namespace stgin::random
