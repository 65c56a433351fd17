#pragma once

#include "entbridge/scenario.hpp"

#include <cstdint>
#include <random>

namespace testgen {

// Small hand-rolled generators; every property test draws from a fixed seed.
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double uniform(double a = 0.0, double b = 1.0) { return a + (b - a) * (double(rng() >> 11) * 0x1.0p-53); }
  int integer(int lo, int hi) { return lo + int(rng() % std::uint64_t(hi - lo + 1)); }

  entbridge::Vector vector(int n, double a = -1.0, double b = 1.0) {
    entbridge::Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(a, b);
    return v;
  }

  // Positive weights with a random fraction of zeros, never all zero.
  entbridge::Vector weights(int n, double zero_fraction = 0.0) {
    entbridge::Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform() < zero_fraction ? 0.0 : uniform(0.1, 1.0);
    if (v.maxCoeff() <= 0.0) v[integer(0, n - 1)] = 1.0;
    return v;
  }

  entbridge::RandomInstance instance(int points) { return entbridge::make_random_instance(rng(), points); }
};

}  // namespace testgen
