#pragma once

#include "entbridge/entropic_path.hpp"
#include "entbridge/ot_oracle.hpp"

namespace entbridge {

/// (1 + 2K^- t) log(|u0|_inf / u_t) - t Gamma(log u_t) per point; u_t = e^{tL} u0.
Vector hamilton_check(const HeatSemigroup& heat, const Vector& u0, double t, double K);

/// K = 0: L log u_t + N/(2t).
/// K != 0: e^{-2Kt/3} L u_t / u_t + (NK/3) e^{-4Kt/3} / (1 - e^{-2Kt/3}) - Gamma(log u_t).
Vector li_yau_check(const HeatSemigroup& heat, const Vector& u0, double t, CurvatureParams cp);

struct SweepOptions {
  double delta = 0.2;
  // The potential comparison runs over the hull of the points where rho0 or
  // rho1 reach this fraction of their maximum.
  double window_level = 1e-3;
  int quadrature_nodes = 17;
  SinkhornOptions sinkhorn;
};

struct ConvergenceReport {
  std::vector<double> epsilons;
  std::vector<double> times;
  double delta = 0.2;
  std::vector<double> metric_errors;                       // sup_t W2(mu_t^eps, mu_t)
  std::vector<std::vector<double>> metric_errors_by_time;  // [eps][t]
  std::vector<double> potential_errors;                    // sup over pairs in the window
  std::vector<double> duality_gaps;                        // sup over t in the window
  std::vector<std::vector<double>> duality_gaps_by_time;   // [eps][t]; NaN outside the window
  std::vector<double> energies;   // window average of sum Gamma(theta) rho m
  double geodesic_energy = 0.0;   // W2(mu0, mu1)^2
  VanishingTable vanishing;
  int reference_point = 0;        // gauge point of the potential comparison
  std::pair<int, int> window_points{0, 0};  // sub-grid [lo, hi] of the potential comparison

  bool metric_decreasing() const;
  bool potential_decreasing() const;
  bool duality_decreasing() const;
};

/// Schrodinger bridges along a decreasing epsilon ladder compared with the exact geodesic.
ConvergenceReport epsilon_sweep(const HeatSemigroup& heat, const Density& rho0,
                                const Density& rho1, const std::vector<double>& epsilons,
                                const std::vector<double>& times,
                                const SweepOptions& options = {});

/// max_x |(-phi_{t1}) - Q_{t1-t0}(-phi_{t0})| over sub-grid points lo..hi, after
/// subtracting the value at the reference point.
double hopf_lax_potential_error(const FiniteSpace& s, const Vector& phi0, const Vector& phi1,
                                double t0, double t1, int lo, int hi, int reference);

struct SecondOrderLimitRow {
  double epsilon = 0.0;
  double fd2 = 0.0;            // central second difference of sum h rho_t^eps m
  double entropic_rhs = 0.0;   // sum h'' Gamma(theta_t) rho_t m
  double gap_entropic = 0.0;
  double gap_to_geodesic = 0.0;
  long iterations = 0;
};

struct SecondOrderLimitTable {
  SecondOrderCheck geodesic;  // exact 1D oracle at the same t, dt
  std::vector<SecondOrderLimitRow> rows;
};

SecondOrderLimitTable second_order_limit_check(const HeatSemigroup& heat, const Density& rho0,
                                               const Density& rho1,
                                               const std::vector<double>& epsilons,
                                               const Vector& h, const Vector& h2, double t,
                                               double dt, const SinkhornOptions& sinkhorn = {});

}  // namespace entbridge
