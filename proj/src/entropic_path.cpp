#include "entbridge/entropic_path.hpp"

#include "entbridge/carre_du_champ.hpp"

#include <algorithm>

namespace entbridge {

namespace {

void require_interior(double t, double dt, const char* who) {
  if (!(dt > 0.0)) throw std::invalid_argument(std::string(who) + ": dt must be positive");
  if (!(t - dt > 0.0 && t + dt < 1.0))
    throw std::invalid_argument(std::string(who) + ": t +- dt must lie in (0, 1)");
}

// (L v / v)(x) = sum_y L(x,y) (e^{lv(y) - lv(x)} - 1), for finite lv.
Vector relative_generator(const FiniteSpace& s, const Vector& lv) {
  Vector out(s.size());
  for (int x = 0; x < s.size(); ++x) {
    double acc = 0.0;
    for (const auto& e : s.neighbors()[x]) acc += e.rate * std::expm1(lv[e.index] - lv[x]);
    out[x] = acc;
  }
  return out;
}

}  // namespace

EntropicPath::EntropicPath(const HeatSemigroup& heat, BridgeSolution sol)
    : heat_(&heat), sol_(std::move(sol)) {
  if (sol_.log_f.size() != heat.size() || sol_.log_g.size() != heat.size())
    throw std::invalid_argument("EntropicPath: solution does not match the space");
}

std::pair<Vector, Vector> EntropicPath::log_factors(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("EntropicPath: t must lie in [0, 1]");
  const double eps = sol_.epsilon;
  const double tf = 0.5 * eps * t;
  const double tg = 0.5 * eps * (1.0 - t);
  Vector lf = heat_->log_apply(tf, sol_.log_f);
  Vector lg = heat_->log_apply(tg, sol_.log_g);
  return {std::move(lf), std::move(lg)};
}

PathFrame EntropicPath::frame(double t) const {
  const FiniteSpace& s = space();
  const int n = s.size();
  const double eps = sol_.epsilon;
  PathFrame fr;
  fr.t = t;
  std::tie(fr.log_f, fr.log_g) = log_factors(t);
  fr.log_rho = fr.log_f + fr.log_g;
  fr.rho = Density(fr.log_rho.array().exp().matrix());
  fr.phi = eps * fr.log_f;
  fr.psi = eps * fr.log_g;
  fr.theta = 0.5 * (fr.psi - fr.phi);

  // On a partial support only neighbours inside the support contribute.
  fr.accel = Vector::Zero(n);
  const Vector& lr = fr.log_rho;
  for (int x = 0; x < n; ++x) {
    if (lr[x] == kNegInf) continue;
    double lap = 0.0, grad = 0.0;
    for (const auto& e : s.neighbors()[x]) {
      if (lr[e.index] == kNegInf) continue;
      const double d = lr[e.index] - lr[x];
      lap += e.rate * d;
      grad += e.rate * d * d;
    }
    fr.accel[x] = -(eps * eps / 8.0) * (2.0 * lap + 0.5 * grad);
  }
  return fr;
}

PathSample interpolate(const EntropicPath& path, const std::vector<double>& times) {
  if (!std::is_sorted(times.begin(), times.end()))
    throw std::invalid_argument("interpolate: times must be sorted");
  PathSample out;
  out.epsilon = path.epsilon();
  out.times = times;
  out.frames.reserve(times.size());
  for (double t : times) out.frames.push_back(path.frame(t));
  return out;
}

double path_entropy(const EntropicPath& path, double t) {
  const auto [lf, lg] = path.log_factors(t);
  const Vector& m = path.space().measure();
  double acc = 0.0;
  for (int x = 0; x < m.size(); ++x) {
    const double lr = lf[x] + lg[x];
    if (lr == kNegInf) continue;
    acc += std::exp(lr) * lr * m[x];
  }
  return acc;
}

double density_ode_residual(const EntropicPath& path, double t, double dt) {
  require_interior(t, dt, "density_ode_residual");
  const FiniteSpace& s = path.space();
  const auto [lfp, lgp] = path.log_factors(t + dt);
  const auto [lfm, lgm] = path.log_factors(t - dt);
  const auto [lf, lg] = path.log_factors(t);
  const Vector fd = ((lfp + lgp).array().exp() - (lfm + lgm).array().exp()).matrix() / (2.0 * dt);
  const Vector rho = (lf + lg).array().exp().matrix();
  // g L f - f L g = rho (Lf/f - Lg/g)
  const Vector rhs = 0.5 * path.epsilon() *
                     rho.cwiseProduct(relative_generator(s, lf) - relative_generator(s, lg));
  return (fd - rhs).cwiseAbs().maxCoeff();
}

HjbResidual hjb_residual(const EntropicPath& path, double t, double dt) {
  require_interior(t, dt, "hjb_residual");
  const FiniteSpace& s = path.space();
  const double eps = path.epsilon();
  const auto [lfp, lgp] = path.log_factors(t + dt);
  const auto [lfm, lgm] = path.log_factors(t - dt);
  const auto [lf, lg] = path.log_factors(t);
  const Vector phi = eps * lf;
  const Vector psi = eps * lg;
  const Vector dphi = eps * (lfp - lfm) / (2.0 * dt);
  const Vector dpsi = eps * (lgp - lgm) / (2.0 * dt);
  const Vector rphi = dphi - 0.5 * gamma(s, phi, phi) - 0.5 * eps * s.apply_generator(phi);
  const Vector rpsi = -dpsi - 0.5 * gamma(s, psi, psi) - 0.5 * eps * s.apply_generator(psi);
  HjbResidual out;
  for (int x = 0; x < s.size(); ++x) {
    if (s.is_boundary(x)) continue;
    out.phi = std::max(out.phi, std::abs(rphi[x]));
    out.psi = std::max(out.psi, std::abs(rpsi[x]));
  }
  return out;
}

double continuity_residual(const EntropicPath& path, double t, double dt, const Vector& h) {
  require_interior(t, dt, "continuity_residual");
  const FiniteSpace& s = path.space();
  if (h.size() != s.size()) throw std::invalid_argument("continuity_residual: length mismatch");
  auto moment = [&](double tt) {
    const auto [lf, lg] = path.log_factors(tt);
    return s.integrate(h.cwiseProduct((lf + lg).array().exp().matrix()));
  };
  const double fd = (moment(t + dt) - moment(t - dt)) / (2.0 * dt);
  const PathFrame fr = path.frame(t);
  const double flux = s.integrate(gamma(s, h, fr.theta).cwiseProduct(fr.rho.values()));
  return std::abs(fd - flux);
}

EntropyDerivatives entropy_derivatives(const EntropicPath& path, double t, double dt) {
  require_interior(t, dt, "entropy_derivatives");
  const FiniteSpace& s = path.space();
  const double eps = path.epsilon();
  EntropyDerivatives d;
  const double hp = path_entropy(path, t + dt);
  const double hm = path_entropy(path, t - dt);
  d.H = path_entropy(path, t);
  d.dH_fd = (hp - hm) / (2.0 * dt);
  d.d2H_fd = (hp - 2.0 * d.H + hm) / (dt * dt);

  const PathFrame fr = path.frame(t);
  const Vector& rho = fr.rho.values();
  d.dH_formula = s.integrate(gamma(s, rho, fr.theta));
  d.dH_formula_alt =
      s.integrate((gamma(s, fr.psi, fr.psi) - gamma(s, fr.phi, fr.phi)).cwiseProduct(rho)) /
      (2.0 * eps);
  d.d2H_formula_theta = gamma2_pairing(s, fr.theta, rho) +
                        0.25 * eps * eps * gamma2_pairing(s, fr.log_rho, rho);
  d.d2H_formula_phipsi =
      0.5 * gamma2_pairing(s, fr.phi, rho) + 0.5 * gamma2_pairing(s, fr.psi, rho);
  return d;
}

bool VanishingTable::vanishing_decreasing() const {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& a = rows[i - 1];
    const auto& b = rows[i];
    if (!(b.laplacian < a.laplacian && b.gradient < a.gradient && b.mixed < a.mixed &&
          b.gradient_cubed < a.gradient_cubed))
      return false;
  }
  return true;
}

namespace {

template <typename F>
double spread(const std::vector<VanishingRow>& rows, F get) {
  double lo = kInf, hi = 0.0;
  for (const auto& r : rows) {
    lo = std::min(lo, get(r));
    hi = std::max(hi, get(r));
  }
  if (rows.empty()) return 1.0;
  return lo > 0.0 ? hi / lo : (hi > 0.0 ? kInf : 1.0);
}

}  // namespace

double VanishingTable::energy_spread() const {
  return spread(rows, [](const VanishingRow& r) { return r.energy; });
}

double VanishingTable::theta_laplacian_spread() const {
  return spread(rows, [](const VanishingRow& r) { return r.theta_laplacian; });
}

VanishingRow vanishing_row(const EntropicPath& path, double delta, int nodes) {
  if (!(delta > 0.0 && delta < 0.5))
    throw std::invalid_argument("vanishing_report: delta must lie in (0, 1/2)");
  if (nodes < 3 || nodes % 2 == 0)
    throw std::invalid_argument("vanishing_report: quadrature_nodes must be odd and >= 3");
  const FiniteSpace& s = path.space();
  const double eps = path.epsilon();
  const double e2 = eps * eps;
  const double step = (1.0 - 2.0 * delta) / (nodes - 1);
  VanishingRow row;
  row.epsilon = eps;
  row.iterations = path.solution().iterations;
  for (int k = 0; k < nodes; ++k) {
    const double w = step / 3.0 * (k == 0 || k == nodes - 1 ? 1.0 : (k % 2 ? 4.0 : 2.0));
    const PathFrame fr = path.frame(delta + k * step);
    const Vector& rho = fr.rho.values();
    const Vector llr = s.apply_generator(fr.log_rho);
    const Vector glr = gamma(s, fr.log_rho, fr.log_rho);
    const Vector lth = s.apply_generator(fr.theta);
    row.laplacian += w * e2 * s.integrate(rho.cwiseProduct(llr.cwiseAbs()));
    row.gradient += w * e2 * s.integrate(rho.cwiseProduct(glr));
    row.mixed +=
        w * e2 * s.integrate(rho.cwiseProduct(llr.cwiseAbs()).cwiseProduct(glr.cwiseSqrt()));
    row.gradient_cubed += w * e2 * s.integrate(rho.cwiseProduct(glr.array().pow(1.5).matrix()));
    row.energy += w * s.integrate(rho.cwiseProduct(gamma(s, fr.theta, fr.theta)));
    row.theta_laplacian += w * s.integrate(rho.cwiseProduct(lth.cwiseAbs2()));
    row.max_density = std::max(row.max_density, rho.maxCoeff());
  }
  return row;
}

VanishingTable vanishing_report(const HeatSemigroup& heat, const Density& rho0,
                                const Density& rho1, const std::vector<double>& epsilons,
                                double delta, const VanishingOptions& options) {
  for (std::size_t i = 1; i < epsilons.size(); ++i)
    if (!(epsilons[i] < epsilons[i - 1]))
      throw std::invalid_argument("vanishing_report: epsilons must be decreasing");
  VanishingTable table;
  table.delta = delta;
  for (double eps : epsilons) {
    const BridgeSolution sol = solve_bridge(heat, {rho0, rho1, eps}, options.sinkhorn);
    const EntropicPath path(heat, normalize_bridge(heat, sol, rho1));
    table.rows.push_back(vanishing_row(path, delta, options.quadrature_nodes));
  }
  return table;
}

double fitted_order(const std::vector<int>& grid_sizes, const std::vector<double>& residuals) {
  if (grid_sizes.size() != residuals.size() || grid_sizes.size() < 2)
    throw std::invalid_argument("fitted_order: need >= 2 aligned samples");
  const std::size_t k = grid_sizes.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(residuals[i] > 0.0) || grid_sizes[i] <= 0)
      throw std::invalid_argument("fitted_order: residuals must be positive");
    const double x = -std::log(static_cast<double>(grid_sizes[i]));
    const double y = std::log(residuals[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = k * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("fitted_order: grid sizes must differ");
  return (k * sxy - sx * sy) / denom;
}

ResidualReport make_residual_report(std::string name, std::vector<int> grid_sizes,
                                    std::vector<double> residuals) {
  ResidualReport r;
  r.fitted_order = fitted_order(grid_sizes, residuals);
  r.name = std::move(name);
  r.grid_sizes = std::move(grid_sizes);
  r.residual_norms = std::move(residuals);
  return r;
}

}  // namespace entbridge
