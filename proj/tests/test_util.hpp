#pragma once

#include "ncpd/linops.hpp"
#include "ncpd/rng.hpp"

#include <cmath>
#include <limits>

namespace ncpd::test {

inline Vector random_vector(Index n, std::uint64_t seed, std::uint64_t key = 0) {
  CounterRng rng(seed, key);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

inline double uniform(CounterRng& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.uniform_open();
}

inline bool bit_equal(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace ncpd::test
