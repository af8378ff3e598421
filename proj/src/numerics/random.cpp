#include "stgin/random.hpp"

#include <cmath>
#include <numbers>

namespace stgin::random {

double normal(Engine& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t below(Engine& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

Tensor fan_in_uniform(Engine& rng, Shape shape, std::size_t fan_in) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  Tensor t(std::move(shape));
  for (double& v : t.storage()) v = uniform(rng, -bound, bound);
  return t;
}

}  // namespace stgin::random
