#pragma once

#include "entbridge/space.hpp"

namespace entbridge {

/// Gaussian profile exp(-(x-mean)^2 / (2 std^2)) sampled at the grid coordinates.
Density gaussian_density(const FiniteSpace& s, double mean, double std_dev);

/// Smooth compactly supported bump exp(-1/(1-r^2)), r = |x-center|/radius.
Density bump_density(const FiniteSpace& s, double center, double radius);

/// Atoms with the given masses (not densities) at the listed points.
Density atoms_density(const FiniteSpace& s, const std::vector<int>& points,
                      const std::vector<double>& masses);

Density uniform_density(const FiniteSpace& s);

/// {"kind":"gaussian","mean","std"} | {"kind":"bump","center","radius"} |
/// {"kind":"atoms","points":[...],"masses":[...]} | {"kind":"uniform"} |
/// {"kind":"custom","values":[...]}; the result is renormalized to mass 1.
Density density_from_json(const FiniteSpace& s, const nlohmann::json& j);

/// Reflection x -> origin + length - x on an ordered grid (index reversal).
Density reflect(const Density& d);

}  // namespace entbridge
