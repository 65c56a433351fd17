#pragma once

#include "entbridge/common.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace entbridge {

enum class SpaceKind { Interval, Circle, Graph };
enum class BoundaryCondition { Neumann, Periodic };

/// Declared curvature-dimension tags (K lower Ricci bound, N upper dimension).
struct CurvatureParams {
  double K = 0.0;
  double N = 1.0;
};

struct Neighbor {
  int index;
  double rate;  // L(x, index)
};

/// Finite metric-measure space with a reversible generator.
///
/// The constructor only checks shapes; the structural invariants
/// (reversibility, zero row sums, metric axioms, connectivity) are reported by
/// validate_space() so that broken spaces can still be inspected.
class FiniteSpace {
 public:
  FiniteSpace(SpaceKind kind, Matrix generator, Vector measure, Matrix distance,
              CurvatureParams curvature = {}, std::optional<Vector> coords = std::nullopt);

  int size() const { return static_cast<int>(measure_.size()); }
  SpaceKind kind() const { return kind_; }
  const Matrix& generator() const { return generator_; }
  const Vector& measure() const { return measure_; }
  const Vector& log_measure() const { return log_measure_; }
  const Matrix& distance() const { return distance_; }
  const std::optional<Vector>& coords() const { return coords_; }
  CurvatureParams curvature() const { return curvature_; }
  const std::vector<std::vector<Neighbor>>& neighbors() const { return neighbors_; }

  /// Endpoints of an interval grid; no point is a boundary point otherwise.
  bool is_boundary(int i) const;
  /// Ordered 1D coordinates with the Euclidean metric (the monotone OT oracle applies).
  bool is_line() const { return kind_ == SpaceKind::Interval && coords_.has_value(); }
  /// Grid spacing for interval and circle spaces, 0 for graphs.
  double spacing() const { return spacing_; }

  /// (Lf)(x) = sum_y L(x,y) (f(y) - f(x)).
  Vector apply_generator(const Vector& f) const;
  /// sum_x f(x) m(x).
  double integrate(const Vector& f) const { return f.dot(measure_); }

 private:
  friend FiniteSpace build_interval_grid(int, double, BoundaryCondition, double);

  SpaceKind kind_;
  Matrix generator_;
  Vector measure_;
  Vector log_measure_;
  Matrix distance_;
  CurvatureParams curvature_;
  std::optional<Vector> coords_;
  std::vector<std::vector<Neighbor>> neighbors_;
  double spacing_ = 0.0;
};

/// Uniform grid on [origin, origin + length]; tagged K = 0, N = 1.
FiniteSpace build_interval_grid(int n, double length, BoundaryCondition bc, double origin = 0.0);

struct Edge {
  int i;
  int j;
  double conductance;
  std::optional<double> length;  // defaults to 1/sqrt(L(i,j) L(j,i))
};

/// Weighted graph with L(i,j) = c(i,j)/m(i) and the shortest-path metric.
FiniteSpace build_weighted_graph(const std::vector<Edge>& edges, const Vector& measure,
                                 CurvatureParams curvature = {});

/// {"kind":"interval"|"circle"|"graph", "n", "length", "bc", "origin",
///  "edges":[[i,j,c]...], "measure":[...], "curvature":{"K","N"}}
FiniteSpace space_from_json(const nlohmann::json& j);

struct InvariantCheck {
  std::string name;
  bool passed = true;
  std::string detail;
  std::vector<int> indices;  // offending point indices (pair or triple)
};

struct SpaceReport {
  std::vector<InvariantCheck> checks;

  bool all_passed() const;
  const InvariantCheck& check(const std::string& name) const;
};

SpaceReport validate_space(const FiniteSpace& s);

/// Nonnegative density with respect to the reference measure m.
class Density {
 public:
  Density() = default;
  explicit Density(Vector values);

  const Vector& values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }
  double operator[](int i) const { return values_[i]; }

  double mass(const FiniteSpace& s) const { return s.integrate(values_); }
  std::vector<int> support() const;
  /// log of the values, -inf off the support.
  Vector log_values() const;

 private:
  Vector values_;
};

/// Rescales nonnegative weights into a probability density; throws on a zero total.
Density normalized_density(const FiniteSpace& s, const Vector& weights);

/// Throws std::invalid_argument unless d is a probability density on s (mass within tol).
void require_probability_density(const FiniteSpace& s, const Density& d, const std::string& what,
                                 double tol = 1e-10);

}  // namespace entbridge
