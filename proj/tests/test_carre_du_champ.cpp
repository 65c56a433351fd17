#include "entbridge/carre_du_champ.hpp"
#include "entbridge/densities.hpp"
#include "entbridge/heat.hpp"
#include "generators.hpp"

#include <doctest.h>

using namespace entbridge;

TEST_CASE("Gamma is symmetric, bilinear and nonnegative on the diagonal") {
  testgen::Gen g(11);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomInstance inst = g.instance(g.integer(2, 8));
    const FiniteSpace& s = inst.space;
    const Vector f = g.vector(s.size()), h = g.vector(s.size()), k = g.vector(s.size());
    const double a = g.uniform(-2, 2);
    CHECK((gamma(s, f, h) - gamma(s, h, f)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((gamma(s, a * f + h, k) - a * gamma(s, f, k) - gamma(s, h, k)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(gamma(s, f, f).minCoeff() >= 0.0);
    // Gamma(f,g) = 1/2 (L(fg) - f Lg - g Lf).
    const Vector lhs = gamma(s, f, h);
    const Vector rhs = 0.5 * (s.apply_generator(f.cwiseProduct(h)) - f.cwiseProduct(s.apply_generator(h)) -
                              h.cwiseProduct(s.apply_generator(f)));
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("discrete integration by parts and zero-mean Laplacian") {
  testgen::Gen g(12);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomInstance inst = g.instance(g.integer(2, 8));
    const FiniteSpace& s = inst.space;
    const Vector f = g.vector(s.size()), h = g.vector(s.size());
    CHECK(s.integrate(f.cwiseProduct(s.apply_generator(h))) ==
          doctest::Approx(-s.integrate(gamma(s, f, h))).epsilon(1e-12).scale(1.0));
    CHECK(std::abs(s.integrate(s.apply_generator(f))) < 1e-12);
  }
}

TEST_CASE("Gamma_2 pairing: both weak forms agree and vanish for constants") {
  testgen::Gen g(13);
  const FiniteSpace s = build_interval_grid(32, 1.0, BoundaryCondition::Neumann);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector f = g.vector(32);
    const Density rho = normalized_density(s, g.weights(32));
    const double direct = s.integrate(gamma2(s, f).cwiseProduct(rho.values()));
    CHECK(gamma2_pairing(s, f, rho) == doctest::Approx(direct).epsilon(1e-10));
  }
  const Density uni = uniform_density(s);
  CHECK(std::abs(gamma2_pairing(s, Vector::Constant(32, 3.0), uni)) < 1e-12);
}

TEST_CASE("Gamma_2 of an eigenvector against the uniform density") {
  // sum Gamma_2(f) m = sum (Lf)^2 m by self-adjointness; for an eigenvector this is lambda^2 |f|^2.
  const FiniteSpace s = build_interval_grid(40, 1.0, BoundaryCondition::Neumann);
  const HeatSemigroup heat(s);
  const Density uni = uniform_density(s);
  for (int k = 1; k <= 3; ++k) {
    const Vector f = heat.eigenvectors().col(k);
    const double lambda = heat.eigenvalues()[k];
    CHECK(gamma2_pairing(s, f, uni) == doctest::Approx(lambda * lambda).epsilon(1e-9));
  }
}

TEST_CASE("Bochner margin is zero for constants and negative for a wrong curvature") {
  const FiniteSpace s = build_interval_grid(64, 1.0, BoundaryCondition::Neumann);
  const HeatSemigroup heat(s);
  CHECK(bochner_check(s, Vector::Constant(64, 2.0), {0.0, 1.0}).cwiseAbs().maxCoeff() == 0.0);
  CHECK(bochner_check(s, heat.eigenvectors().col(1), {10.0, 1.0}).minCoeff() < -1.0);
}

TEST_CASE("Bochner margin on low eigenvectors vanishes at second order under refinement") {
  // On the flat grid with N = 1 the continuum margin is identically zero; the
  // discrete margin oscillates in sign at size O(h^2) relative to (Lf)^2.
  for (int k = 1; k <= 5; ++k) {
    double previous = 0.0;
    for (int n : {64, 128, 256}) {
      const FiniteSpace s = build_interval_grid(n, 1.0, BoundaryCondition::Neumann);
      const HeatSemigroup heat(s);
      const Vector f = heat.eigenvectors().col(k);
      const double scale = s.apply_generator(f).cwiseAbs2().maxCoeff();
      const double rel = -bochner_check(s, f, {0.0, 1.0}).minCoeff() / scale;
      CHECK(rel < 0.25 * k * k * std::pow(2.0 / n, 2) * 10.0);
      if (previous > 0.0) CHECK(rel < previous / 3.5);
      previous = rel;
    }
  }
}
