#pragma once

#include "entbridge/bridge.hpp"

#include <vector>

namespace entbridge {

/// Entropic interpolation at a single time.
struct PathFrame {
  double t = 0.0;
  Density rho;    // f_t g_t
  Vector log_f;   // log h_{eps t/2} f
  Vector log_g;   // log h_{eps (1-t)/2} g
  Vector log_rho;
  Vector phi;     // eps log f_t
  Vector psi;     // eps log g_t
  Vector theta;   // (psi - phi) / 2
  Vector accel;   // -(eps^2/8)(2 L log rho + Gamma(log rho)) on supp rho, 0 elsewhere
};

struct PathSample {
  double epsilon = 0.0;
  std::vector<double> times;
  std::vector<PathFrame> frames;
};

/// Lazily evaluated entropic interpolation for one Schrodinger pair.
class EntropicPath {
 public:
  EntropicPath(const HeatSemigroup& heat, BridgeSolution sol);

  const HeatSemigroup& heat() const { return *heat_; }
  const FiniteSpace& space() const { return heat_->space(); }
  const BridgeSolution& solution() const { return sol_; }
  double epsilon() const { return sol_.epsilon; }

  PathFrame frame(double t) const;
  /// log f_t and log g_t only.
  std::pair<Vector, Vector> log_factors(double t) const;

 private:
  const HeatSemigroup* heat_;
  BridgeSolution sol_;
};

PathSample interpolate(const EntropicPath& path, const std::vector<double>& times);

/// sum rho_t log rho_t m.
double path_entropy(const EntropicPath& path, double t);

/// Sup-norm gap between the central difference of rho_t and (eps/2)(g_t L f_t - f_t L g_t).
double density_ode_residual(const EntropicPath& path, double t, double dt);

struct HjbResidual {
  double phi = 0.0;
  double psi = 0.0;
};

/// Forward/backward Hamilton-Jacobi-Bellman residuals over non-boundary points:
///   d/dt phi = 1/2 Gamma(phi) + (eps/2) L phi,  -d/dt psi = 1/2 Gamma(psi) + (eps/2) L psi.
HjbResidual hjb_residual(const EntropicPath& path, double t, double dt);

/// |d/dt sum h rho_t m - sum Gamma(h, theta_t) rho_t m| with a central difference in t.
double continuity_residual(const EntropicPath& path, double t, double dt, const Vector& h);

struct EntropyDerivatives {
  double H = 0.0;
  double dH_fd = 0.0;
  double d2H_fd = 0.0;
  double dH_formula = 0.0;      // sum Gamma(rho, theta) m
  double dH_formula_alt = 0.0;  // (1/2eps) sum (Gamma(psi) - Gamma(phi)) rho m
  double d2H_formula_theta = 0.0;
  double d2H_formula_phipsi = 0.0;
};

EntropyDerivatives entropy_derivatives(const EntropicPath& path, double t, double dt);

struct VanishingRow {
  double epsilon = 0.0;
  double laplacian = 0.0;        // eps^2 int sum rho |L log rho| m
  double gradient = 0.0;         // eps^2 int sum rho Gamma(log rho) m
  double mixed = 0.0;            // eps^2 int sum rho |L log rho| sqrt(Gamma(log rho)) m
  double gradient_cubed = 0.0;   // eps^2 int sum rho Gamma(log rho)^{3/2} m
  double energy = 0.0;           // int sum Gamma(theta) rho m
  double theta_laplacian = 0.0;  // int sum (L theta)^2 rho m
  double max_density = 0.0;      // sup over nodes of max rho_t
  long iterations = 0;
};

struct VanishingTable {
  double delta = 0.0;
  std::vector<VanishingRow> rows;

  /// Each of the four vanishing columns strictly decreasing.
  bool vanishing_decreasing() const;
  /// max/min ratio of each bounded column across the sweep.
  double energy_spread() const;
  double theta_laplacian_spread() const;
};

struct VanishingOptions {
  int quadrature_nodes = 17;  // odd, composite Simpson
  SinkhornOptions sinkhorn;
};

/// Composite Simpson integrals over [delta, 1-delta] along one path.
VanishingRow vanishing_row(const EntropicPath& path, double delta, int quadrature_nodes);

/// Time integrals over [delta, 1-delta] of the vanishing and bounded quantities, per epsilon.
VanishingTable vanishing_report(const HeatSemigroup& heat, const Density& rho0,
                                const Density& rho1, const std::vector<double>& epsilons,
                                double delta, const VanishingOptions& options = {});

/// Row of one quantity measured on a sequence of grids.
struct ResidualReport {
  std::string name;
  std::vector<int> grid_sizes;
  std::vector<double> residual_norms;
  double fitted_order = 0.0;
};

/// Least-squares slope of log(residual) against log(1/n); requires >= 2 positive residuals.
double fitted_order(const std::vector<int>& grid_sizes, const std::vector<double>& residuals);

ResidualReport make_residual_report(std::string name, std::vector<int> grid_sizes,
                                    std::vector<double> residuals);

}  // namespace entbridge
