#include "entbridge/densities.hpp"
#include "entbridge/entropic_path.hpp"
#include "generators.hpp"

#include <doctest.h>

using namespace entbridge;

namespace {

struct Fixture {
  FiniteSpace s = build_interval_grid(64, 1.0, BoundaryCondition::Neumann);
  HeatSemigroup heat{s};
  Density r0 = gaussian_density(s, 0.3, 0.1);
  Density r1 = gaussian_density(s, 0.7, 0.1);

  EntropicPath path(double eps) const {
    return EntropicPath(heat, normalize_bridge(heat, solve_bridge(heat, {r0, r1, eps}), r1));
  }
};

}  // namespace

TEST_CASE("path endpoints reproduce the marginals and mass is conserved") {
  const Fixture F;
  const EntropicPath p = F.path(0.2);
  CHECK((p.frame(0.0).rho.values() - F.r0.values()).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((p.frame(1.0).rho.values() - F.r1.values()).cwiseAbs().maxCoeff() < 1e-8);
  for (double t : {0.1, 0.37, 0.5, 0.9}) CHECK(p.frame(t).rho.mass(F.s) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("frame fields are consistent") {
  const Fixture F;
  const EntropicPath p = F.path(0.2);
  const PathFrame fr = p.frame(0.4);
  CHECK((fr.phi - 0.2 * fr.log_f).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((fr.psi - 0.2 * fr.log_g).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((fr.theta - 0.5 * (fr.psi - fr.phi)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((fr.log_rho - (fr.log_f + fr.log_g)).cwiseAbs().maxCoeff() < 1e-12);
  const PathSample sample = interpolate(p, {0.25, 0.75});
  CHECK(sample.frames.size() == 2);
  CHECK(sample.frames[1].t == 0.75);
}

TEST_CASE("density ODE residual is second order in dt") {
  const Fixture F;
  const EntropicPath p = F.path(0.2);
  const double r2 = density_ode_residual(p, 0.5, 2e-3), r1 = density_ode_residual(p, 0.5, 1e-3);
  CHECK(r2 / r1 == doctest::Approx(4.0).epsilon(0.05));
  CHECK_THROWS_AS(density_ode_residual(p, 0.0005, 1e-3), std::invalid_argument);
}

TEST_CASE("uniform endpoints give a stationary path with vanishing residuals") {
  const FiniteSpace s = build_interval_grid(16, 1.0, BoundaryCondition::Neumann);
  const HeatSemigroup heat(s);
  const Density u = uniform_density(s);
  const EntropicPath p(heat, normalize_bridge(heat, solve_bridge(heat, {u, u, 0.5}), u));
  CHECK(density_ode_residual(p, 0.5, 1e-3) < 1e-10);
  const HjbResidual h = hjb_residual(p, 0.5, 1e-3);
  CHECK(h.phi < 1e-10);
  CHECK(h.psi < 1e-10);
  CHECK(continuity_residual(p, 0.5, 1e-3, *s.coords()) < 1e-10);
  CHECK(p.frame(0.5).accel.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("entropy derivatives: formulas agree with finite differences") {
  const Fixture F;
  const EntropicPath p = F.path(0.2);
  for (double t : {0.3, 0.5, 0.7}) {
    const EntropyDerivatives d = entropy_derivatives(p, t, 1e-3);
    // The two first-derivative forms coincide only in the continuum; on n = 64
    // they differ by the O(h^2) chain-rule defect (measured below 5e-4).
    CHECK(std::abs(d.dH_formula - d.dH_formula_alt) < 1e-3);
    CHECK(d.d2H_formula_theta == doctest::Approx(d.d2H_formula_phipsi).epsilon(1e-10));
    CHECK(std::abs(d.dH_fd - d.dH_formula) < 1e-3);
    CHECK(std::abs(d.d2H_fd - d.d2H_formula_theta) < 5e-3);
    CHECK(d.d2H_fd > 0.0);
  }
  // Symmetric pair: H is extremal at t = 1/2.
  CHECK(std::abs(entropy_derivatives(p, 0.5, 1e-3).dH_fd) < 1e-8);
  CHECK(path_entropy(p, 0.5) < path_entropy(p, 0.1));
}

TEST_CASE("refinement: HJB, continuity and d2H gaps shrink at second order") {
  std::vector<int> sizes{32, 64, 128};
  std::vector<double> hjb, cont, d2h;
  for (int n : sizes) {
    const FiniteSpace s = build_interval_grid(n, 1.0, BoundaryCondition::Neumann);
    const HeatSemigroup heat(s);
    const Density r0 = gaussian_density(s, 0.3, 0.1), r1 = gaussian_density(s, 0.7, 0.1);
    const EntropicPath p(heat, normalize_bridge(heat, solve_bridge(heat, {r0, r1, 0.2}), r1));
    const HjbResidual r = hjb_residual(p, 0.5, 1e-3);
    hjb.push_back(std::max(r.phi, r.psi));
    cont.push_back(continuity_residual(p, 0.5, 1e-3, s.coords()->cwiseAbs2()));
    const EntropyDerivatives d = entropy_derivatives(p, 0.5, 1e-3);
    d2h.push_back(std::abs(d.d2H_fd - d.d2H_formula_theta));
  }
  CHECK(fitted_order(sizes, hjb) > 1.8);
  CHECK(fitted_order(sizes, cont) > 1.8);
  CHECK(fitted_order(sizes, d2h) > 1.8);
}

TEST_CASE("fitted_order recovers synthetic slopes") {
  CHECK(fitted_order({10, 20, 40}, {1.0, 0.25, 0.0625}) == doctest::Approx(2.0));
  CHECK(fitted_order({10, 20}, {1.0, 0.5}) == doctest::Approx(1.0));
  CHECK_THROWS(fitted_order({10}, {1.0}));
  const ResidualReport r = make_residual_report("x", {8, 16}, {1.0, 0.125});
  CHECK(r.fitted_order == doctest::Approx(3.0));
}

TEST_CASE("vanishing table: bump-to-bump dilation regression") {
  // Frozen on first run: four vanishing columns decrease and the bounded
  // columns stay within a factor 10 along the ladder.
  const FiniteSpace s = build_interval_grid(128, 2.0, BoundaryCondition::Neumann);
  const HeatSemigroup heat(s);
  const Density r0 = bump_density(s, 0.8, 0.4), r1 = bump_density(s, 1.2, 0.6);
  const VanishingTable t = vanishing_report(heat, r0, r1, {0.4, 0.2, 0.1, 0.05}, 0.2);
  REQUIRE(t.rows.size() == 4);
  CHECK(t.vanishing_decreasing());
  CHECK(t.energy_spread() < 10.0);
  CHECK(t.theta_laplacian_spread() < 10.0);
  CHECK(t.rows.back().laplacian <= 0.25 * t.rows.front().laplacian);
  CHECK_THROWS(vanishing_report(heat, r0, r1, {0.1, 0.2}, 0.2));
}

TEST_CASE("first-derivative entropy forms converge together under refinement") {
  std::vector<int> sizes{32, 64, 128};
  std::vector<double> fd_gap, alt_gap;
  for (int n : sizes) {
    const FiniteSpace s = build_interval_grid(n, 1.0, BoundaryCondition::Neumann);
    const HeatSemigroup heat(s);
    const Density r0 = gaussian_density(s, 0.3, 0.1), r1 = gaussian_density(s, 0.7, 0.1);
    const EntropicPath p(heat, solve_bridge(heat, {r0, r1, 0.2}));
    const EntropyDerivatives d = entropy_derivatives(p, 0.3, 1e-3);
    fd_gap.push_back(std::abs(d.dH_fd - d.dH_formula));
    alt_gap.push_back(std::abs(d.dH_formula - d.dH_formula_alt));
  }
  CHECK(fitted_order(sizes, fd_gap) > 1.5);
  CHECK(fitted_order(sizes, alt_gap) > 1.5);
}

TEST_CASE("time reversal swaps the path and flips dH") {
  const Fixture F;
  const HeatSemigroup& heat = F.heat;
  const Density a = gaussian_density(F.s, 0.35, 0.08), b = gaussian_density(F.s, 0.6, 0.12);
  const EntropicPath fwd(heat, solve_bridge(heat, {a, b, 0.3}));
  const EntropicPath bwd(heat, solve_bridge(heat, {b, a, 0.3}));
  for (double t : {0.2, 0.45}) {
    CHECK((fwd.frame(t).rho.values() - bwd.frame(1.0 - t).rho.values()).cwiseAbs().maxCoeff() < 1e-9);
    const EntropyDerivatives df = entropy_derivatives(fwd, t, 1e-3), db = entropy_derivatives(bwd, 1.0 - t, 1e-3);
    CHECK(df.H == doctest::Approx(db.H).epsilon(1e-9));
    CHECK(df.dH_fd == doctest::Approx(-db.dH_fd).epsilon(1e-6));
    CHECK(df.d2H_fd == doctest::Approx(db.d2H_fd).epsilon(1e-5));
  }
}
