#include "entbridge/densities.hpp"
#include "entbridge/entropic_path.hpp"
#include "entbridge/ot_oracle.hpp"
#include "generators.hpp"

#include <doctest.h>

using namespace entbridge;

TEST_CASE("LP and quantile couplings agree in cost on random 1D instances") {
  testgen::Gen g(31);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = g.integer(2, 40);
    const FiniteSpace s = build_interval_grid(n, g.uniform(0.5, 3.0), BoundaryCondition::Neumann);
    const Density r0 = normalized_density(s, g.weights(n, 0.4));
    const Density r1 = normalized_density(s, g.weights(n, 0.4));
    const TransportPlan lp = solve_ot_lp(s, r0, r1);
    const TransportPlan qc = quantile_coupling_1d(s, r0, r1);
    CHECK(std::abs(lp.cost - qc.cost) <= 1e-9);
    // Marginals of both plans.
    for (const TransportPlan* p : {&lp, &qc}) {
      CHECK((p->plan.rowwise().sum() - r0.values().cwiseProduct(s.measure())).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((p->plan.colwise().sum().transpose() - r1.values().cwiseProduct(s.measure())).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("LP duals are feasible, tight on the plan and close the duality gap") {
  testgen::Gen g(32);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomInstance inst = g.instance(g.integer(3, 9));
    const FiniteSpace& s = inst.space;
    const TransportPlan lp = solve_ot_lp(s, inst.rho0, inst.rho1);
    const Matrix c = 0.5 * s.distance().cwiseAbs2();
    for (int x = 0; x < s.size(); ++x)
      for (int y = 0; y < s.size(); ++y) {
        CHECK(lp.u[x] + lp.v[y] <= c(x, y) + 1e-10);
        if (lp.plan(x, y) > 1e-14) CHECK(std::abs(lp.u[x] + lp.v[y] - c(x, y)) < 1e-10);
      }
    CHECK(std::abs(duality_gap(s, inst.rho0, inst.rho1, lp.u)) < 1e-8);
  }
}

TEST_CASE("duality gap examples") {
  const FiniteSpace s = build_interval_grid(5, 1.0, BoundaryCondition::Neumann);
  const Density a = atoms_density(s, {0}, {1.0}), b = atoms_density(s, {4}, {1.0});
  CHECK(duality_gap(s, a, b, Vector::Zero(5)) == doctest::Approx(0.5));
  CHECK(std::abs(duality_gap(s, a, a, Vector::Zero(5))) < 1e-15);
  testgen::Gen g(33);
  for (int k = 0; k < 10; ++k) CHECK(duality_gap(s, a, b, g.vector(5)) >= -1e-9);
}

TEST_CASE("c-transform is idempotent after two steps") {
  testgen::Gen g(34);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomInstance inst = g.instance(g.integer(2, 8));
    const Vector phi = g.vector(inst.space.size());
    const Vector pc = c_transform(inst.space, phi);
    const Vector pccc = c_transform(inst.space, c_transform(inst.space, pc));
    CHECK((pc - pccc).cwiseAbs().maxCoeff() < 1e-12);
    // Q_1(-phi) = phi^c on any metric space.
    CHECK((hopf_lax(inst.space, -phi, 1.0) - pc).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("Hopf-Lax on two points at unit distance") {
  const FiniteSpace s = build_weighted_graph({{0, 1, 1.0, 1.0}}, Vector::Ones(2));
  const Vector f = (Vector(2) << 0.0, 0.5).finished();
  for (double t : {0.25, 1.0, 2.0, 10.0}) {
    const Vector q = hopf_lax(s, f, t);
    CHECK(q[0] == doctest::Approx(0.0));
    CHECK(q[1] == doctest::Approx(std::min(0.5, 1.0 / (2.0 * t))));
  }
}

TEST_CASE("Hopf-Lax composition inequality holds exactly") {
  testgen::Gen g(35);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomInstance inst = g.instance(g.integer(2, 9));
    const Vector f = g.vector(inst.space.size(), 0.0, 2.0);
    const CompositionCheck c = hopf_lax_composition(inst.space, f, g.uniform(0.05, 1.0), g.uniform(0.05, 1.0));
    CHECK(c.violations == 0);
    CHECK(c.max_defect >= -1e-12);
  }
}

TEST_CASE("Hopf-Lax composition defect shrinks under 1D refinement") {
  std::vector<int> sizes{33, 65, 129};
  std::vector<double> defects;
  for (int n : sizes) {
    const FiniteSpace s = build_interval_grid(n, 1.0, BoundaryCondition::Neumann);
    Vector f(n);
    for (int i = 0; i < n; ++i) f[i] = std::sin(6.0 * (*s.coords())[i]);
    defects.push_back(hopf_lax_composition(s, f, 0.1, 0.1).max_defect);
  }
  CHECK(fitted_order(sizes, defects) >= 1.0);
}

TEST_CASE("Hopf-Lax HJ residual shrinks under refinement") {
  double prev = kInf;
  for (int n : {33, 65, 129, 257}) {
    const FiniteSpace s = build_interval_grid(n, 1.0, BoundaryCondition::Neumann);
    const Vector f = s.coords()->cwiseAbs2() * 0.5;
    const double r = hopf_lax_hj_residual(s, f, 0.3, 1e-3);
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("1D geodesic: pushforward, endpoints and second-order formula") {
  const FiniteSpace s = build_interval_grid(256, 1.0, BoundaryCondition::Neumann, -0.45);
  const Density r0 = gaussian_density(s, -0.2, 0.05), r1 = gaussian_density(s, 0.3, 0.05);
  const Geodesic1D geo(s, r0, r1);
  CHECK(geo.pushforward_cdf_error() < 1e-3);
  CHECK((displacement_interpolation_1d(geo, 0.0).values() - r0.values()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(wasserstein2(s, displacement_interpolation_1d(geo, 1.0), r1) < s.spacing());
  // Constant-speed: W2(mu_0, mu_t) = t W2(mu_0, mu_1) up to the grid.
  const double w = wasserstein2(s, r0, r1);
  CHECK(w == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(wasserstein2(s, r0, displacement_interpolation_1d(geo, 0.5)) == doctest::Approx(0.5 * w).epsilon(1e-2));
  const SecondOrderCheck c = second_order_formula_check_1d(geo, s.coords()->cwiseAbs2(), Vector::Constant(256, 2.0), 0.5, 0.1);
  CHECK(c.lhs_fd2 == doctest::Approx(0.5).epsilon(5e-3));
  CHECK(c.rhs == doctest::Approx(0.5).epsilon(5e-3));
  // Linear h: both sides vanish up to the second-difference noise.
  const SecondOrderCheck lin = second_order_formula_check_1d(geo, *s.coords(), Vector::Zero(256), 0.5, 0.1);
  CHECK(std::abs(lin.lhs_fd2) < 1e-10);
  CHECK(lin.rhs == 0.0);
}

TEST_CASE("LP cap") {
  const FiniteSpace s = build_interval_grid(80, 1.0, BoundaryCondition::Neumann);
  const Density u = uniform_density(s);
  CHECK_THROWS_AS(solve_ot_lp(s, u, u), InstanceTooLarge);
  CHECK(wasserstein2(s, u, u) == doctest::Approx(0.0).scale(1.0));
}
