#include "entbridge/estimates.hpp"

#include "entbridge/carre_du_champ.hpp"

#include <algorithm>

namespace entbridge {

namespace {

Vector log_heat_flow(const HeatSemigroup& heat, const Vector& u0, double t, const char* who) {
  if (u0.size() != heat.size()) throw std::invalid_argument(std::string(who) + ": length mismatch");
  if (!(t > 0.0)) throw std::invalid_argument(std::string(who) + ": t must be positive");
  if ((u0.array() < 0.0).any() || !u0.allFinite())
    throw std::invalid_argument(std::string(who) + ": u0 must be nonnegative and finite");
  if (!(u0.maxCoeff() > 0.0)) throw std::invalid_argument(std::string(who) + ": u0 vanishes identically");
  const Vector lu0 = u0.array().log().matrix();
  return heat.log_apply(t, lu0);
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

}  // namespace

Vector hamilton_check(const HeatSemigroup& heat, const Vector& u0, double t, double K) {
  const Vector lu = log_heat_flow(heat, u0, t, "hamilton_check");
  const double kminus = std::max(0.0, -K);
  const double lsup = std::log(u0.maxCoeff());
  const Vector grad = gamma(heat.space(), lu, lu);
  return ((1.0 + 2.0 * kminus * t) * (lsup - lu.array()) - t * grad.array()).matrix();
}

Vector li_yau_check(const HeatSemigroup& heat, const Vector& u0, double t, CurvatureParams cp) {
  const Vector lu = log_heat_flow(heat, u0, t, "li_yau_check");
  const FiniteSpace& s = heat.space();
  if (cp.K == 0.0) return (s.apply_generator(lu).array() + cp.N / (2.0 * t)).matrix();

  const double a = std::exp(-2.0 * cp.K * t / 3.0);
  const double tail = cp.N * cp.K / 3.0 * std::exp(-4.0 * cp.K * t / 3.0) / (1.0 - a);
  Vector lu_over_u(s.size());
  for (int x = 0; x < s.size(); ++x) {
    double acc = 0.0;
    for (const auto& e : s.neighbors()[x]) acc += e.rate * std::expm1(lu[e.index] - lu[x]);
    lu_over_u[x] = acc;
  }
  return (a * lu_over_u.array() + tail - gamma(s, lu, lu).array()).matrix();
}

bool ConvergenceReport::metric_decreasing() const { return strictly_decreasing(metric_errors); }
bool ConvergenceReport::potential_decreasing() const {
  return strictly_decreasing(potential_errors);
}
bool ConvergenceReport::duality_decreasing() const { return strictly_decreasing(duality_gaps); }

double hopf_lax_potential_error(const FiniteSpace& s, const Vector& phi0, const Vector& phi1,
                                double t0, double t1, int lo, int hi, int reference) {
  if (!(t1 > t0)) throw std::invalid_argument("hopf_lax_potential_error: need t0 < t1");
  const Vector q = hopf_lax(s, -phi0, t1 - t0);
  const Vector target = -phi1;
  const double shift = (target[reference] - q[reference]);
  double err = 0.0;
  for (int x = lo; x <= hi; ++x) err = std::max(err, std::abs(target[x] - q[x] - shift));
  return err;
}

ConvergenceReport epsilon_sweep(const HeatSemigroup& heat, const Density& rho0,
                                const Density& rho1, const std::vector<double>& epsilons,
                                const std::vector<double>& times, const SweepOptions& options) {
  const FiniteSpace& s = heat.space();
  if (!s.is_line())
    throw std::invalid_argument("epsilon_sweep: the exact geodesic oracle needs a 1D interval grid");
  if (epsilons.empty()) throw std::invalid_argument("epsilon_sweep: empty epsilon ladder");
  if (!strictly_decreasing(epsilons))
    throw std::invalid_argument("epsilon_sweep: epsilons must be decreasing");
  if (!std::is_sorted(times.begin(), times.end()) || times.empty() || times.front() < 0.0 ||
      times.back() > 1.0)
    throw std::invalid_argument("epsilon_sweep: times must be sorted inside [0, 1]");
  const double delta = options.delta;

  ConvergenceReport rep;
  rep.epsilons = epsilons;
  rep.times = times;
  rep.delta = delta;
  const Geodesic1D geo(s, rho0, rho1);
  const double w01 = wasserstein2(s, rho0, rho1);
  rep.geodesic_energy = w01 * w01;

  int lo = s.size(), hi = -1;
  for (const Density* d : {&rho0, &rho1}) {
    const double level = options.window_level * d->values().maxCoeff();
    for (int x = 0; x < s.size(); ++x)
      if ((*d)[x] > 0.0 && (*d)[x] >= level) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
  }
  rep.window_points = {lo, hi};
  rep.reference_point = (lo + hi) / 2;

  std::vector<Density> geodesic;
  for (double t : times) geodesic.push_back(displacement_interpolation_1d(geo, t));
  auto in_window = [&](double t) { return t >= delta - 1e-12 && t <= 1.0 - delta + 1e-12; };

  rep.vanishing.delta = delta;
  for (double eps : epsilons) {
    const BridgeSolution sol = solve_bridge(heat, {rho0, rho1, eps}, options.sinkhorn);
    const EntropicPath path(heat, normalize_bridge(heat, sol, rho1));

    std::vector<PathFrame> frames;
    for (double t : times) frames.push_back(path.frame(t));

    std::vector<double> werr, gaps;
    double wsup = 0.0, gsup = 0.0, psup = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      werr.push_back(wasserstein2(s, frames[k].rho, geodesic[k]));
      wsup = std::max(wsup, werr.back());
      if (in_window(times[k])) {
        const Vector pot = -(1.0 - times[k]) * frames[k].psi;
        gaps.push_back(duality_gap(s, frames[k].rho, rho1, pot));
        gsup = std::max(gsup, gaps.back());
      } else {
        gaps.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    for (std::size_t a = 0; a < times.size(); ++a)
      for (std::size_t b = a + 1; b < times.size(); ++b) {
        if (!in_window(times[a]) || !in_window(times[b]) || !(times[b] > times[a])) continue;
        psup = std::max(psup, hopf_lax_potential_error(s, frames[a].phi, frames[b].phi, times[a],
                                                       times[b], lo, hi, rep.reference_point));
      }
    rep.metric_errors.push_back(wsup);
    rep.metric_errors_by_time.push_back(werr);
    rep.duality_gaps.push_back(gsup);
    rep.duality_gaps_by_time.push_back(gaps);
    rep.potential_errors.push_back(psup);

    const VanishingRow row = vanishing_row(path, delta, options.quadrature_nodes);
    rep.energies.push_back(row.energy / (1.0 - 2.0 * delta));
    rep.vanishing.rows.push_back(row);
  }
  return rep;
}

SecondOrderLimitTable second_order_limit_check(const HeatSemigroup& heat, const Density& rho0,
                                               const Density& rho1,
                                               const std::vector<double>& epsilons,
                                               const Vector& h, const Vector& h2, double t,
                                               double dt, const SinkhornOptions& sinkhorn) {
  const FiniteSpace& s = heat.space();
  if (!s.is_line())
    throw std::invalid_argument("second_order_limit_check: requires a 1D interval grid");
  if (h.size() != s.size() || h2.size() != s.size())
    throw std::invalid_argument("second_order_limit_check: length mismatch");
  SecondOrderLimitTable table;
  table.geodesic = second_order_formula_check_1d(Geodesic1D(s, rho0, rho1), h, h2, t, dt);
  for (double eps : epsilons) {
    const BridgeSolution sol = solve_bridge(heat, {rho0, rho1, eps}, sinkhorn);
    const EntropicPath path(heat, sol);
    auto moment = [&](double tt) {
      const auto [lf, lg] = path.log_factors(tt);
      return s.integrate(h.cwiseProduct((lf + lg).array().exp().matrix()));
    };
    SecondOrderLimitRow row;
    row.epsilon = eps;
    row.iterations = sol.iterations;
    row.fd2 = (moment(t + dt) - 2.0 * moment(t) + moment(t - dt)) / (dt * dt);
    const PathFrame fr = path.frame(t);
    row.entropic_rhs =
        s.integrate(h2.cwiseProduct(gamma(s, fr.theta, fr.theta)).cwiseProduct(fr.rho.values()));
    row.gap_entropic = std::abs(row.fd2 - row.entropic_rhs);
    row.gap_to_geodesic = std::abs(row.fd2 - table.geodesic.rhs);
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace entbridge
