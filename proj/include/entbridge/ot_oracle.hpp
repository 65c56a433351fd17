#pragma once

#include "entbridge/space.hpp"

#include <vector>

namespace entbridge {

/// Largest supp(rho0) x supp(rho1) handled by the dense simplex.
inline constexpr int kLpCap = 4096;

class InstanceTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Optimal plan for the cost d^2/2 with Kantorovich duals.
struct TransportPlan {
  Matrix plan;
  double cost = 0.0;  // 1/2 sum plan d^2
  Vector u;           // u(x) + v(y) <= d^2(x,y)/2, equality on the plan; empty when not computed
  Vector v;

  double w2() const { return std::sqrt(2.0 * std::max(0.0, cost)); }
};

/// Transportation simplex (north-west start, Bland's rule) on the supports.
/// The duals are extended off the supports so that u = v^c everywhere.
TransportPlan solve_ot_lp(const FiniteSpace& s, const Density& rho0, const Density& rho1);

/// Monotone (north-west corner on ordered points) coupling; line spaces only. No duals.
TransportPlan quantile_coupling_1d(const FiniteSpace& s, const Density& rho0, const Density& rho1);

/// W2 by the monotone coupling on line spaces, by the LP otherwise.
double wasserstein2(const FiniteSpace& s, const Density& rho0, const Density& rho1);

/// Displacement geodesic between two densities on an ordered grid.
///
/// The monotone map sends each source point to the target quantile of its
/// mid-quantile, read off the piecewise-linear target CDF whose knots sit at
/// the cell midpoints.
class Geodesic1D {
 public:
  Geodesic1D(const FiniteSpace& s, const Density& rho0, const Density& rho1);

  const FiniteSpace& space() const { return *space_; }
  const Vector& grid() const { return x_; }
  const Density& rho0() const { return rho0_; }
  const Density& rho1() const { return rho1_; }
  /// T(x_i); only meaningful on supp(rho0).
  const Vector& map() const { return T_; }
  /// Position of source atom i at time t.
  double position(int i, double t) const { return (1.0 - t) * x_[i] + t * T_[i]; }
  /// Velocity carried by source atom i, v_t(gamma_t(x_i)) = T(x_i) - x_i.
  double velocity(int i) const { return T_[i] - x_[i]; }
  /// Sup-norm gap between the CDF of T_# rho0 (re-binned) and the CDF of rho1.
  double pushforward_cdf_error() const;

 private:
  const FiniteSpace* space_;
  Vector x_;
  Density rho0_;
  Density rho1_;
  Vector T_;
};

/// Pushforward of rho0 under (1-t) x + t T(x), deposited linearly onto the two nearest grid points.
Density displacement_interpolation_1d(const Geodesic1D& g, double t);

/// Q_t f(x) = min_y d^2(x,y)/(2t) + f(y), by enumeration.
Vector hopf_lax(const FiniteSpace& s, const Vector& f, double t);

/// phi^c(x) = min_y d^2(x,y)/2 - phi(y), by enumeration. Terms with phi(y) = -inf are skipped.
Vector c_transform(const FiniteSpace& s, const Vector& phi);

/// 1/2 W2^2 - sum phi rho0 m - sum phi^c rho1 m; nonnegative up to roundoff.
double duality_gap(const FiniteSpace& s, const Density& rho0, const Density& rho1,
                   const Vector& phi);

/// Largest one-sided difference quotient |f(y) - f(x)| / d(x,y) over the neighbours of x.
Vector local_lipschitz(const FiniteSpace& s, const Vector& f);

struct CompositionCheck {
  double max_defect = 0.0;  // max_x Q_t Q_s f - Q_{t+s} f (>= 0 in exact arithmetic)
  int violations = 0;       // points where Q_{t+s} f > Q_t Q_s f beyond roundoff
};

CompositionCheck hopf_lax_composition(const FiniteSpace& s, const Vector& f, double t, double s_time);

/// max |(Q_{t+dt} f - Q_{t-dt} f)/(2dt) + 1/2 lip(Q_t f)^2| over non-boundary points.
double hopf_lax_hj_residual(const FiniteSpace& s, const Vector& f, double t, double dt);

struct SecondOrderCheck {
  double lhs_fd2 = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
};

/// Central second difference of sum h mu_t against sum h''(gamma_t(x)) (T(x) - x)^2 rho0 m.
/// h2 supplies h'' at grid points and is interpolated linearly between them.
SecondOrderCheck second_order_formula_check_1d(const Geodesic1D& g, const Vector& h,
                                               const Vector& h2, double t, double dt);

/// Linear interpolation of grid samples at a coordinate (clamped at the ends).
double interpolate_on_grid(const Vector& grid, const Vector& values, double x);

}  // namespace entbridge
