#include "entbridge/densities.hpp"
#include "entbridge/heat.hpp"
#include "generators.hpp"

#include <doctest.h>

#include <numbers>

using namespace entbridge;

TEST_CASE("two-point Neumann grid has the half-cell generator") {
  const FiniteSpace s = build_interval_grid(2, 1.0, BoundaryCondition::Neumann);
  CHECK(s.generator()(0, 0) == doctest::Approx(-2.0));
  CHECK(s.generator()(0, 1) == doctest::Approx(2.0));
  CHECK(s.measure()[0] == doctest::Approx(0.5));
  CHECK(s.distance()(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("Neumann grid spectrum matches the cosine closed form") {
  for (int n : {5, 17, 64}) {
    const FiniteSpace s = build_interval_grid(n, 1.0, BoundaryCondition::Neumann);
    const HeatSemigroup heat(s);
    const double h = 1.0 / (n - 1);
    for (int k = 0; k < n; ++k) {
      const double exact = -2.0 / (h * h) * (1.0 - std::cos(k * std::numbers::pi / (n - 1)));
      CHECK(heat.eigenvalues()[k] == doctest::Approx(exact).epsilon(1e-10).scale(1.0 / (h * h)));
    }
  }
}

TEST_CASE("periodic grid spectrum") {
  const int n = 12;
  const FiniteSpace s = build_interval_grid(n, 1.0, BoundaryCondition::Periodic);
  const HeatSemigroup heat(s);
  const double h = 1.0 / n;
  std::vector<double> exact;
  for (int k = 0; k < n; ++k) exact.push_back(-2.0 / (h * h) * (1.0 - std::cos(2.0 * std::numbers::pi * k / n)));
  std::sort(exact.begin(), exact.end(), std::greater<>());
  for (int k = 0; k < n; ++k) CHECK(heat.eigenvalues()[k] == doctest::Approx(exact[k]).scale(1e3));
  CHECK(s.distance()(0, n - 1) == doctest::Approx(h));
}

TEST_CASE("triangle graph with unit conductances and measure 1/3") {
  const Vector m = Vector::Constant(3, 1.0 / 3.0);
  const FiniteSpace s = build_weighted_graph({{0, 1, 1.0, {}}, {1, 2, 1.0, {}}, {0, 2, 1.0, {}}}, m);
  const HeatSemigroup heat(s);
  CHECK(heat.eigenvalues()[0] == doctest::Approx(0.0).scale(1.0));
  CHECK(heat.eigenvalues()[1] == doctest::Approx(-9.0));
  CHECK(heat.eigenvalues()[2] == doctest::Approx(-9.0));
  // Default edge length 1 / sqrt(L_ij L_ji) = 1/3.
  CHECK(s.distance()(0, 1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("random graphs satisfy the structural invariants") {
  testgen::Gen g(101);
  for (int trial = 0; trial < 25; ++trial) {
    const RandomInstance inst = g.instance(g.integer(2, 9));
    const SpaceReport rep = validate_space(inst.space);
    CHECK(rep.all_passed());
    const Matrix& L = inst.space.generator();
    CHECK((L.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-12);
    const Matrix ML = inst.space.measure().asDiagonal() * L;
    CHECK((ML - ML.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("validate_space reports a broken generator") {
  Matrix L(2, 2);
  L << -1.0, 1.0, 3.0, -3.0;
  Matrix d(2, 2);
  d << 0.0, 1.0, 1.0, 0.0;
  const FiniteSpace s(SpaceKind::Graph, L, Vector::Ones(2), d);
  const SpaceReport rep = validate_space(s);
  CHECK_FALSE(rep.all_passed());
}

TEST_CASE("space JSON round trip and errors") {
  const FiniteSpace s = space_from_json({{"kind", "interval"}, {"n", 9}, {"length", 2.0}, {"origin", -1.0}});
  REQUIRE(s.is_line());
  CHECK((*s.coords())[0] == doctest::Approx(-1.0));
  CHECK((*s.coords())[8] == doctest::Approx(1.0));
  CHECK(s.spacing() == doctest::Approx(0.25));
  CHECK_THROWS(space_from_json({{"kind", "torus"}, {"n", 4}}));
  CHECK_THROWS(space_from_json({{"kind", "interval"}, {"n", 4}, {"bc", "dirichlet"}}));
}

TEST_CASE("densities normalize to one") {
  const FiniteSpace s = build_interval_grid(33, 1.0, BoundaryCondition::Neumann);
  for (const Density& d : {gaussian_density(s, 0.4, 0.1), bump_density(s, 0.5, 0.2), uniform_density(s),
                           atoms_density(s, {3, 10}, {0.25, 0.75})})
    CHECK(d.mass(s) == doctest::Approx(1.0).epsilon(1e-14));
  const Density b = bump_density(s, 0.5, 0.2);
  CHECK(b[0] == 0.0);
  CHECK(b.support().size() < 33);
  const Density a = atoms_density(s, {3}, {1.0});
  CHECK(a[3] * s.measure()[3] == doctest::Approx(1.0));
  CHECK_THROWS(normalized_density(s, Vector::Zero(33)));
}
