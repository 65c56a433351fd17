#pragma once

#include "entbridge/heat.hpp"

#include <memory>

namespace entbridge {

/// Smallest epsilon accepted by the Schrodinger solver.
inline constexpr double kEpsilonFloor = 1e-4;

class InvalidEpsilon : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BridgeProblem {
  Density rho0;
  Density rho1;
  double epsilon = 1.0;
};

struct SinkhornOptions {
  double tol = 1e-10;  // l1(m) marginal error
  long max_iter = 100000;
};

/// Schrodinger pair (f, g) in log form for the reference coupling r_{eps/2} m x m.
struct BridgeSolution {
  Vector log_f;  // -inf off supp(rho0)
  Vector log_g;  // -inf off supp(rho1)
  double epsilon = 0.0;
  double kernel_time = 0.0;  // eps/2
  double marginal_residual = 0.0;
  long iterations = 0;
  std::shared_ptr<const Matrix> log_kernel;  // log r_{eps/2}
};

/// Joint mass per point pair.
struct Coupling {
  Matrix plan;
};

/// Alternating log-domain Sinkhorn on the heat kernel r_{eps/2}.
/// Throws InvalidEpsilon, std::invalid_argument for bad densities, NoConvergence.
BridgeSolution solve_bridge(const HeatSemigroup& heat, const BridgeProblem& problem,
                            const SinkhornOptions& options = {});

/// (c f, g / c) with log c = log_scale.
BridgeSolution rescale_bridge(const BridgeSolution& sol, double log_scale);

/// sum_y log(h_{eps/2} f)(y) rho1(y) m(y); zero for a normalized pair.
double normalization_residual(const HeatSemigroup& heat, const BridgeSolution& sol,
                              const Density& rho1);

/// Fixes the multiplicative gauge so that normalization_residual() vanishes.
BridgeSolution normalize_bridge(const HeatSemigroup& heat, const BridgeSolution& sol,
                                const Density& rho1);

/// gamma(x,y) = f(x) g(y) r_{eps/2}(x,y) m(x) m(y).
Coupling entropic_coupling(const FiniteSpace& s, const BridgeSolution& sol);

/// log R(x,y) = log r(x,y) + log m(x) + log m(y).
Matrix log_reference_coupling(const FiniteSpace& s, const Matrix& log_kernel);
/// log of (rho0 m) x (rho1 m).
Matrix log_product_coupling(const FiniteSpace& s, const Density& rho0, const Density& rho1);

/// H(rho m | m) = sum rho log rho m, with 0 log 0 = 0.
double relative_entropy(const FiniteSpace& s, const Density& rho);
/// H(gamma | R) = sum gamma log(gamma / R); +inf when gamma charges a point where R vanishes.
double relative_entropy(const Coupling& gamma, const Matrix& log_reference);

/// l1 distance between the marginals of gamma and (rho0 m, rho1 m).
double coupling_marginal_error(const FiniteSpace& s, const Coupling& gamma, const Density& rho0,
                               const Density& rho1);

/// Sup-norm residual of the best additive fit u(x) + v(y) to log(gamma/R) on
/// supp(rho0) x supp(rho1); zero exactly when gamma has product form f(x) g(y) R(x,y).
double separability_residual(const Coupling& gamma, const Matrix& log_reference,
                             const Density& rho0, const Density& rho1);

struct OracleOptions {
  double damping = 0.8;
  double step_tol = 1e-13;
  long max_iter = 2000000;
};

/// Independent minimizer of H(. | R^{eps/2}) over the transport polytope:
/// damped Bregman projections in plan space, columns before rows, stopped on
/// the size of the projection step. Intended for n <= 16.
Coupling entropy_oracle_min(const HeatSemigroup& heat, const BridgeProblem& problem,
                            const OracleOptions& options = {});

}  // namespace entbridge
