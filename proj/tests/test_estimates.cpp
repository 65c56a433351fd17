#include "entbridge/densities.hpp"
#include "entbridge/estimates.hpp"
#include "generators.hpp"

#include <doctest.h>

using namespace entbridge;

TEST_CASE("Hamilton and Li-Yau margins for constant and uniform data") {
  const FiniteSpace s = build_interval_grid(32, 1.0, BoundaryCondition::Neumann);
  const HeatSemigroup heat(s);
  const Vector c = Vector::Constant(32, 2.5);
  CHECK(hamilton_check(heat, c, 0.1, 0.0).cwiseAbs().maxCoeff() < 1e-12);
  const Vector ly = li_yau_check(heat, c, 0.1, {0.0, 1.0});
  CHECK((ly.array() - 5.0).abs().maxCoeff() < 1e-10);
  // Positive curvature tag: only the tail term survives.
  const double K = 2.0, N = 1.0, t = 0.1;
  const double a = std::exp(-2.0 * K * t / 3.0);
  const double tail = N * K / 3.0 * std::exp(-4.0 * K * t / 3.0) / (1.0 - a);
  CHECK((li_yau_check(heat, c, t, {K, N}).array() - tail).abs().maxCoeff() < 1e-10);
  CHECK_THROWS(hamilton_check(heat, Vector::Zero(32), 0.1, 0.0));
  CHECK_THROWS(li_yau_check(heat, c, 0.0, {0.0, 1.0}));
  CHECK_THROWS(hamilton_check(heat, -c, 0.1, 0.0));
}

TEST_CASE("bump initial data on the flat grid respects both estimates") {
  for (int n : {128, 256}) {
    const FiniteSpace s = build_interval_grid(n, 1.0, BoundaryCondition::Neumann);
    const HeatSemigroup heat(s);
    const Vector u0 = bump_density(s, 0.5, 0.2).values();
    CHECK(hamilton_check(heat, u0, 0.1, 0.0).minCoeff() >= -1e-3);
    CHECK(hamilton_check(heat, u0, 0.2, 0.0).minCoeff() >= -1e-3);
    CHECK(li_yau_check(heat, u0, 0.05, {0.0, 1.0}).minCoeff() >= -1e-2);
  }
}

TEST_CASE("Li-Yau margin decreases toward zero as the flow flattens") {
  const FiniteSpace s = build_interval_grid(128, 1.0, BoundaryCondition::Neumann);
  const HeatSemigroup heat(s);
  const Vector u0 = bump_density(s, 0.5, 0.2).values();
  double prev = kInf;
  for (double t : {0.1, 0.2, 0.5, 1.0, 2.0}) {
    const double m = li_yau_check(heat, u0, t, {0.0, 1.0}).minCoeff();
    CHECK(m < prev);
    CHECK(m > 0.0);
    prev = m;
  }
}

TEST_CASE("Hopf-Lax potential error vanishes on an exact Hopf-Lax pair") {
  testgen::Gen g(41);
  const FiniteSpace s = build_interval_grid(40, 1.0, BoundaryCondition::Neumann);
  const Vector phi0 = g.vector(40);
  const Vector phi1 = -hopf_lax(s, -phi0, 0.3) + Vector::Constant(40, 7.0);
  CHECK(hopf_lax_potential_error(s, phi0, phi1, 0.2, 0.5, 0, 39, 20) < 1e-12);
  CHECK_THROWS(hopf_lax_potential_error(s, phi0, phi1, 0.5, 0.2, 0, 39, 20));
}

TEST_CASE("epsilon_sweep input checks") {
  const FiniteSpace g = make_random_instance(3, 5).space;
  const HeatSemigroup hg(g);
  const Density u = uniform_density(g);
  CHECK_THROWS(epsilon_sweep(hg, u, u, {0.2}, {0.5}));
  const FiniteSpace s = build_interval_grid(32, 1.0, BoundaryCondition::Neumann);
  const HeatSemigroup hs(s);
  const Density a = gaussian_density(s, 0.4, 0.1), b = gaussian_density(s, 0.6, 0.1);
  CHECK_THROWS(epsilon_sweep(hs, a, b, {0.1, 0.2}, {0.5}));
  CHECK_THROWS(epsilon_sweep(hs, a, b, {0.2}, {0.75, 0.25}));
}

TEST_CASE("sweep regression on the shipped Gaussian dilation") {
  const FiniteSpace s = build_interval_grid(128, 2.0, BoundaryCondition::Neumann);
  const HeatSemigroup heat(s);
  const Density r0 = gaussian_density(s, 0.8, 0.15), r1 = gaussian_density(s, 1.2, 0.25);
  const ConvergenceReport rep = epsilon_sweep(heat, r0, r1, {0.4, 0.2, 0.1, 0.05}, {0.25, 0.5, 0.75});
  CHECK(rep.metric_decreasing());
  CHECK(rep.potential_decreasing());
  CHECK(rep.metric_errors.back() <= 2.0 * s.spacing());
  CHECK(rep.vanishing.vanishing_decreasing());
  // Window energies approach W2^2 from above.
  for (std::size_t k = 1; k < rep.energies.size(); ++k) CHECK(rep.energies[k] < rep.energies[k - 1]);
  CHECK(rep.energies.back() == doctest::Approx(rep.geodesic_energy).epsilon(0.02));
  for (const auto& row : rep.duality_gaps_by_time) {
    CHECK(std::isnan(row[0]) == false);
    for (double v : row) CHECK((std::isnan(v) || v >= -1e-9));
  }
}

TEST_CASE("second-order limit: linear h and the Gaussian pair") {
  const FiniteSpace s = build_interval_grid(256, 1.0, BoundaryCondition::Neumann, -0.45);
  const HeatSemigroup heat(s);
  const Density r0 = gaussian_density(s, -0.2, 0.05), r1 = gaussian_density(s, 0.3, 0.05);
  const Vector& x = *s.coords();
  const SecondOrderLimitTable lin = second_order_limit_check(heat, r0, r1, {0.01}, x, Vector::Zero(256), 0.5, 0.1);
  CHECK(std::abs(lin.rows[0].fd2) < 1e-6);
  CHECK(lin.rows[0].entropic_rhs == 0.0);
  const SecondOrderLimitTable quad = second_order_limit_check(
      heat, r0, r1, {0.01, 0.005, 0.0025}, x.cwiseAbs2(), Vector::Constant(256, 2.0), 0.5, 0.1);
  // Gaps to the geodesic decrease along the ladder.
  for (std::size_t k = 1; k < quad.rows.size(); ++k)
    CHECK(quad.rows[k].gap_to_geodesic < quad.rows[k - 1].gap_to_geodesic);
  CHECK(quad.geodesic.rhs == doctest::Approx(0.5).epsilon(5e-3));
}
