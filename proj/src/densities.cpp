#include "entbridge/densities.hpp"

namespace entbridge {

namespace {

const Vector& require_coords(const FiniteSpace& s, const char* who) {
  if (!s.coords()) throw std::invalid_argument(std::string(who) + ": space has no coordinates");
  return *s.coords();
}

}  // namespace

Density gaussian_density(const FiniteSpace& s, double mean, double std_dev) {
  if (!(std_dev > 0.0)) throw std::invalid_argument("gaussian_density: std must be positive");
  const Vector& x = require_coords(s, "gaussian_density");
  Vector w = (-(x.array() - mean).square() / (2.0 * std_dev * std_dev)).exp().matrix();
  return normalized_density(s, w);
}

Density bump_density(const FiniteSpace& s, double center, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("bump_density: radius must be positive");
  const Vector& x = require_coords(s, "bump_density");
  Vector w = Vector::Zero(s.size());
  for (int i = 0; i < s.size(); ++i) {
    const double r = std::abs(x[i] - center) / radius;
    if (r < 1.0) w[i] = std::exp(-1.0 / (1.0 - r * r));
  }
  return normalized_density(s, w);
}

Density atoms_density(const FiniteSpace& s, const std::vector<int>& points,
                      const std::vector<double>& masses) {
  if (points.size() != masses.size() || points.empty())
    throw std::invalid_argument("atoms_density: points and masses must be nonempty and aligned");
  Vector w = Vector::Zero(s.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const int p = points[k];
    if (p < 0 || p >= s.size()) throw std::invalid_argument("atoms_density: point out of range");
    if (masses[k] < 0.0) throw std::invalid_argument("atoms_density: negative mass");
    w[p] += masses[k] / s.measure()[p];
  }
  return normalized_density(s, w);
}

Density uniform_density(const FiniteSpace& s) {
  return normalized_density(s, Vector::Ones(s.size()));
}

Density density_from_json(const FiniteSpace& s, const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gaussian") return gaussian_density(s, j.at("mean").get<double>(), j.at("std").get<double>());
  if (kind == "bump") return bump_density(s, j.at("center").get<double>(), j.at("radius").get<double>());
  if (kind == "uniform") return uniform_density(s);
  if (kind == "atoms")
    return atoms_density(s, j.at("points").get<std::vector<int>>(),
                         j.at("masses").get<std::vector<double>>());
  if (kind == "custom") {
    const auto v = j.at("values").get<std::vector<double>>();
    if (static_cast<int>(v.size()) != s.size())
      throw std::invalid_argument("density.values: expected " + std::to_string(s.size()) + " entries");
    return normalized_density(s, Eigen::Map<const Vector>(v.data(), s.size()));
  }
  throw std::invalid_argument("density.kind: unknown kind '" + kind + "'");
}

Density reflect(const Density& d) { return Density(d.values().reverse()); }

}  // namespace entbridge
