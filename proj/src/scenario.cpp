#include "entbridge/scenario.hpp"

#include "entbridge/densities.hpp"
#include "entbridge/estimates.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

namespace entbridge {

using nlohmann::json;

namespace {

std::vector<double> number_list(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number())
      throw ConfigError(field + "[" + std::to_string(k) + "]", "expected a number");
    out.push_back(j[k].get<double>());
  }
  return out;
}

double param(const ScenarioConfig& cfg, const std::string& key, double fallback) {
  if (!cfg.params.contains(key)) return fallback;
  const json& v = cfg.params.at(key);
  if (!v.is_number()) throw ConfigError("params." + key, "expected a number");
  return v.get<double>();
}

std::vector<double> param_list(const ScenarioConfig& cfg, const std::string& key,
                               std::vector<double> fallback) {
  if (!cfg.params.contains(key)) return fallback;
  return number_list(cfg.params.at(key), "params." + key);
}

std::vector<int> int_list(const ScenarioConfig& cfg, const std::string& key) {
  if (!cfg.params.contains(key)) throw ConfigError("params." + key, "required by this check");
  std::vector<int> out;
  for (double v : number_list(cfg.params.at(key), "params." + key)) {
    if (v != std::floor(v) || v < 2) throw ConfigError("params." + key, "expected integers >= 2");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

// Evaluates f and rethrows numerical failures tagged with the module they came from.
template <typename F>
auto in_module(const char* module, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const ModuleError&) {
    throw;
  } catch (const std::exception& e) {
    throw ModuleError(module, e.what());
  }
}

Vector abscissa(const FiniteSpace& s) {
  if (s.coords()) return *s.coords();
  return s.distance().row(0).transpose();
}

bool interior(double t, double dt) { return t - dt > 0.0 && t + dt < 1.0; }

void add_number(json& dst, const std::string& key, double v) { dst[key] = json_number(v); }

// --- checks -----------------------------------------------------------------

CheckOutcome check_bridge(const ScenarioConfig& cfg) {
  CheckOutcome out{"bridge", true, json::object(), {}, {}};
  const FiniteSpace s = scenario_space(cfg);
  const auto [rho0, rho1] = scenario_densities(cfg, s);
  const HeatSemigroup heat = in_module("space_core", [&] { return HeatSemigroup(s); });
  const Vector x = abscissa(s);

  CsvTable summary{{"epsilon", "iterations", "marginal_residual", "coupling_marginal_error",
                    "normalization_residual", "separability_residual", "relative_entropy"},
                   {}};
  CsvTable factors{{"epsilon", "i", "x", "log_f", "log_g"}, {}};
  json rows = json::array();
  for (double eps : cfg.epsilons) {
    const BridgeSolution sol = in_module("schrodinger_solver", [&] {
      const BridgeSolution raw = solve_bridge(heat, {rho0, rho1, eps}, {cfg.tolerances.sinkhorn_tol});
      return normalize_bridge(heat, raw, rho1);
    });
    const Coupling gamma = entropic_coupling(s, sol);
    const Matrix logR = log_reference_coupling(s, *sol.log_kernel);
    const double cme = coupling_marginal_error(s, gamma, rho0, rho1);
    const double nres = normalization_residual(heat, sol, rho1);
    const double sep = separability_residual(gamma, logR, rho0, rho1);
    const double H = relative_entropy(gamma, logR);
    summary.add_row({eps, sol.iterations, sol.marginal_residual, cme, nres, sep, H});
    for (int i = 0; i < s.size(); ++i) factors.add_row({eps, long(i), x[i], sol.log_f[i], sol.log_g[i]});
    const bool ok = sol.marginal_residual <= cfg.tolerances.sinkhorn_tol;
    out.passed = out.passed && ok;
    json row{{"epsilon", eps}, {"iterations", sol.iterations}, {"passed", ok}};
    add_number(row, "marginal_residual", sol.marginal_residual);
    add_number(row, "coupling_marginal_error", cme);
    add_number(row, "normalization_residual", nres);
    add_number(row, "separability_residual", sep);
    add_number(row, "relative_entropy", H);
    rows.push_back(row);
  }
  out.data["rows"] = rows;
  out.tables.emplace_back("bridge", std::move(summary));
  out.tables.emplace_back("bridge_factors", std::move(factors));
  return out;
}

CheckOutcome check_path(const ScenarioConfig& cfg) {
  CheckOutcome out{"path", true, json::object(), {}, {}};
  const FiniteSpace s = scenario_space(cfg);
  const auto [rho0, rho1] = scenario_densities(cfg, s);
  const HeatSemigroup heat(s);
  const Vector x = abscissa(s);
  const double dt = cfg.tolerances.fd_dt;
  const double bound = cfg.tolerances.path_residual;

  CsvTable frames{{"epsilon", "t", "i", "x", "rho", "phi", "psi", "theta", "accel"}, {}};
  CsvTable residuals{{"epsilon", "t", "density_ode", "hjb_phi", "hjb_psi", "continuity"}, {}};
  json rows = json::array();
  for (double eps : cfg.epsilons) {
    const BridgeSolution sol = in_module("schrodinger_solver", [&] {
      return normalize_bridge(heat, solve_bridge(heat, {rho0, rho1, eps}, {cfg.tolerances.sinkhorn_tol}), rho1);
    });
    const EntropicPath path(heat, sol);
    for (double t : cfg.times) {
      const PathFrame fr = in_module("entropic_path", [&] { return path.frame(t); });
      for (int i = 0; i < s.size(); ++i)
        frames.add_row({eps, t, long(i), x[i], fr.rho[i], fr.phi[i], fr.psi[i], fr.theta[i], fr.accel[i]});
      if (!interior(t, dt)) continue;
      const double ode = density_ode_residual(path, t, dt);
      const HjbResidual hjb = hjb_residual(path, t, dt);
      const double cont = continuity_residual(path, t, dt, x);
      residuals.add_row({eps, t, ode, hjb.phi, hjb.psi, cont});
      bool ok = std::isfinite(ode) && std::isfinite(hjb.phi) && std::isfinite(hjb.psi) && std::isfinite(cont);
      if (bound >= 0.0) ok = ok && std::max({ode, hjb.phi, hjb.psi, cont}) <= bound;
      out.passed = out.passed && ok;
      json row{{"epsilon", eps}, {"t", t}, {"passed", ok}};
      add_number(row, "density_ode", ode);
      add_number(row, "hjb_phi", hjb.phi);
      add_number(row, "hjb_psi", hjb.psi);
      add_number(row, "continuity", cont);
      rows.push_back(row);
    }
  }
  out.data["fd_dt"] = dt;
  out.data["residual_bound"] = bound >= 0.0 ? json(bound) : json(nullptr);
  out.data["rows"] = rows;
  out.tables.emplace_back("path_frames", std::move(frames));
  out.tables.emplace_back("path_residuals", std::move(residuals));
  return out;
}

CheckOutcome check_entropy(const ScenarioConfig& cfg) {
  CheckOutcome out{"entropy", true, json::object(), {}, {}};
  const FiniteSpace s = scenario_space(cfg);
  const auto [rho0, rho1] = scenario_densities(cfg, s);
  const HeatSemigroup heat(s);
  const double dt = cfg.tolerances.fd_dt;

  CsvTable table{{"epsilon", "t", "H", "dH_fd", "dH_formula", "dH_formula_alt", "d2H_fd",
                  "d2H_formula_theta", "d2H_formula_phipsi"},
                 {}};
  json rows = json::array();
  for (double eps : cfg.epsilons) {
    const BridgeSolution sol = in_module("schrodinger_solver", [&] {
      return solve_bridge(heat, {rho0, rho1, eps}, {cfg.tolerances.sinkhorn_tol});
    });
    const EntropicPath path(heat, sol);
    for (double t : cfg.times) {
      if (!interior(t, dt)) continue;
      const EntropyDerivatives d = in_module("entropic_path", [&] { return entropy_derivatives(path, t, dt); });
      table.add_row({eps, t, d.H, d.dH_fd, d.dH_formula, d.dH_formula_alt, d.d2H_fd,
                     d.d2H_formula_theta, d.d2H_formula_phipsi});
      const bool ok = std::abs(d.d2H_formula_theta - d.d2H_formula_phipsi) <=
                      1e-8 * (1.0 + std::abs(d.d2H_formula_theta));
      out.passed = out.passed && ok;
      json row{{"epsilon", eps}, {"t", t}, {"passed", ok}};
      add_number(row, "H", d.H);
      add_number(row, "dH_fd", d.dH_fd);
      add_number(row, "dH_formula", d.dH_formula);
      add_number(row, "dH_formula_alt", d.dH_formula_alt);
      add_number(row, "d2H_fd", d.d2H_fd);
      add_number(row, "d2H_formula_theta", d.d2H_formula_theta);
      add_number(row, "d2H_formula_phipsi", d.d2H_formula_phipsi);
      rows.push_back(row);
    }
  }
  out.data["rows"] = rows;
  out.tables.emplace_back("entropy", std::move(table));
  return out;
}

CheckOutcome check_refinement(const ScenarioConfig& cfg) {
  CheckOutcome out{"refinement", true, json::object(), {}, {}};
  const std::vector<int> sizes = int_list(cfg, "grid_sizes");
  const double t = param(cfg, "t", 0.5);
  const double min_order = param(cfg, "min_order", 1.0);
  const double dt = cfg.tolerances.fd_dt;
  const double eps = cfg.epsilons.front();

  std::vector<double> hjb, cont, d2h;
  CsvTable table{{"n", "hjb", "continuity", "d2H_gap"}, {}};
  for (int n : sizes) {
    const FiniteSpace s = scenario_space(cfg, n);
    if (!s.is_line()) throw ConfigError("space", "refinement needs an interval grid");
    const auto [rho0, rho1] = scenario_densities(cfg, s);
    const HeatSemigroup heat(s);
    const BridgeSolution sol = in_module("schrodinger_solver", [&] {
      return normalize_bridge(heat, solve_bridge(heat, {rho0, rho1, eps}, {cfg.tolerances.sinkhorn_tol}), rho1);
    });
    const EntropicPath path(heat, sol);
    const HjbResidual r = hjb_residual(path, t, dt);
    const Vector x2 = s.coords()->cwiseAbs2();
    const EntropyDerivatives d = entropy_derivatives(path, t, dt);
    hjb.push_back(std::max(r.phi, r.psi));
    cont.push_back(continuity_residual(path, t, dt, x2));
    d2h.push_back(std::abs(d.d2H_fd - d.d2H_formula_theta));
    table.add_row({long(n), hjb.back(), cont.back(), d2h.back()});
  }
  CsvTable orders{{"quantity", "fitted_order"}, {}};
  json reports = json::array();
  for (const auto& [name, res] : {std::pair{"hjb", hjb}, {"continuity", cont}, {"d2H_gap", d2h}}) {
    const ResidualReport rep = make_residual_report(name, sizes, res);
    orders.add_row({rep.name, rep.fitted_order});
    const bool ok = rep.fitted_order >= min_order;
    out.passed = out.passed && ok;
    reports.push_back({{"name", rep.name}, {"grid_sizes", rep.grid_sizes},
                       {"residual_norms", json_numbers(rep.residual_norms)},
                       {"fitted_order", json_number(rep.fitted_order)}, {"passed", ok}});
  }
  out.data = {{"epsilon", eps}, {"t", t}, {"fd_dt", dt}, {"min_order", min_order}, {"reports", reports}};
  out.tables.emplace_back("refinement", std::move(table));
  out.tables.emplace_back("refinement_orders", std::move(orders));
  return out;
}

CheckOutcome check_sweep(const ScenarioConfig& cfg) {
  CheckOutcome out{"sweep", true, json::object(), {}, {}};
  const FiniteSpace s = scenario_space(cfg);
  const auto [rho0, rho1] = scenario_densities(cfg, s);
  const HeatSemigroup heat(s);
  SweepOptions opt;
  opt.delta = cfg.tolerances.window_delta;
  opt.window_level = param(cfg, "window_level", opt.window_level);
  opt.quadrature_nodes = static_cast<int>(param(cfg, "quadrature_nodes", opt.quadrature_nodes));
  opt.sinkhorn.tol = cfg.tolerances.sinkhorn_tol;
  const double final_fraction = param(cfg, "final_fraction", 0.25);
  const double max_spread = param(cfg, "max_spread", 10.0);
  const double grid_factor = param(cfg, "metric_grid_factor", 2.0);

  const ConvergenceReport rep = in_module("estimates", [&] {
    return epsilon_sweep(heat, rho0, rho1, cfg.epsilons, cfg.times, opt);
  });
  const auto& vr = rep.vanishing.rows;
  bool quarter = true;
  for (auto col : {&VanishingRow::laplacian, &VanishingRow::gradient, &VanishingRow::mixed,
                   &VanishingRow::gradient_cubed})
    quarter = quarter && vr.back().*col <= final_fraction * (vr.front().*col);
  const double espread = rep.vanishing.energy_spread();
  const double tspread = rep.vanishing.theta_laplacian_spread();
  const double metric_bound = grid_factor * s.spacing();

  json flags{{"vanishing_decreasing", rep.vanishing.vanishing_decreasing()},
             {"vanishing_final_fraction", quarter},
             {"bounded_spread", espread < max_spread && tspread < max_spread},
             {"metric_decreasing", rep.metric_decreasing()},
             {"metric_grid_floor", rep.metric_errors.back() <= metric_bound},
             {"potential_decreasing", rep.potential_decreasing()},
             {"duality_decreasing", rep.duality_decreasing()}};
  for (const char* k : {"vanishing_decreasing", "vanishing_final_fraction", "bounded_spread",
                        "metric_decreasing", "metric_grid_floor", "potential_decreasing"})
    out.passed = out.passed && flags[k].get<bool>();

  CsvTable table{{"epsilon", "metric_error", "potential_error", "duality_gap", "energy", "laplacian",
                  "gradient", "mixed", "gradient_cubed", "theta_laplacian", "max_density", "iterations"},
                 {}};
  CsvTable by_time{{"epsilon", "t", "w2_to_geodesic", "duality_gap"}, {}};
  for (std::size_t k = 0; k < rep.epsilons.size(); ++k) {
    table.add_row({rep.epsilons[k], rep.metric_errors[k], rep.potential_errors[k], rep.duality_gaps[k],
                   rep.energies[k], vr[k].laplacian, vr[k].gradient, vr[k].mixed, vr[k].gradient_cubed,
                   vr[k].theta_laplacian, vr[k].max_density, vr[k].iterations});
    for (std::size_t i = 0; i < rep.times.size(); ++i)
      by_time.add_row({rep.epsilons[k], rep.times[i], rep.metric_errors_by_time[k][i],
                       rep.duality_gaps_by_time[k][i]});
  }
  json rows = json::array();
  for (std::size_t k = 0; k < rep.epsilons.size(); ++k) {
    json row{{"epsilon", rep.epsilons[k]}, {"iterations", vr[k].iterations}};
    add_number(row, "metric_error", rep.metric_errors[k]);
    add_number(row, "potential_error", rep.potential_errors[k]);
    add_number(row, "duality_gap", rep.duality_gaps[k]);
    add_number(row, "energy", rep.energies[k]);
    add_number(row, "laplacian", vr[k].laplacian);
    add_number(row, "gradient", vr[k].gradient);
    add_number(row, "mixed", vr[k].mixed);
    add_number(row, "gradient_cubed", vr[k].gradient_cubed);
    add_number(row, "theta_laplacian", vr[k].theta_laplacian);
    add_number(row, "max_density", vr[k].max_density);
    row["metric_errors_by_time"] = json_numbers(rep.metric_errors_by_time[k]);
    row["duality_gaps_by_time"] = json_numbers(rep.duality_gaps_by_time[k]);
    rows.push_back(row);
  }
  out.data = {{"delta", rep.delta},
              {"times", rep.times},
              {"rows", rows},
              {"flags", flags},
              {"energy_spread", json_number(espread)},
              {"theta_laplacian_spread", json_number(tspread)},
              {"geodesic_energy", json_number(rep.geodesic_energy)},
              {"metric_bound", metric_bound},
              {"window_points", {rep.window_points.first, rep.window_points.second}},
              {"reference_point", rep.reference_point}};
  out.tables.emplace_back("sweep", std::move(table));
  out.tables.emplace_back("sweep_by_time", std::move(by_time));
  out.svgs.emplace_back("sweep_errors",
                        svg_line_plot("errors against epsilon", rep.epsilons,
                                      {{"W2 to geodesic", rep.metric_errors},
                                       {"Hopf-Lax residual", rep.potential_errors},
                                       {"duality gap", rep.duality_gaps}},
                                      true));
  return out;
}

CheckOutcome check_second_order(const ScenarioConfig& cfg) {
  CheckOutcome out{"second_order", true, json::object(), {}, {}};
  const FiniteSpace s = scenario_space(cfg);
  if (!s.is_line()) throw ConfigError("space", "second_order needs an interval grid");
  const auto [rho0, rho1] = scenario_densities(cfg, s);
  const HeatSemigroup heat(s);
  const std::string hname = cfg.params.value("h", std::string("x2"));
  const Vector& x = *s.coords();
  Vector h, h2;
  if (hname == "x2") {
    h = x.cwiseAbs2();
    h2 = Vector::Constant(s.size(), 2.0);
  } else if (hname == "x") {
    h = x;
    h2 = Vector::Zero(s.size());
  } else {
    throw ConfigError("params.h", "expected \"x\" or \"x2\"");
  }
  const double t = param(cfg, "t", 0.5);
  const double dt = param(cfg, "dt", 0.1);
  const double floor_factor = param(cfg, "floor_factor", 3.0);
  const SecondOrderLimitTable tab = in_module("estimates", [&] {
    return second_order_limit_check(heat, rho0, rho1, cfg.epsilons, h, h2, t, dt,
                                    {cfg.tolerances.sinkhorn_tol});
  });

  json geo{{"lhs_fd2", tab.geodesic.lhs_fd2}, {"rhs", tab.geodesic.rhs}, {"gap", tab.geodesic.gap}};
  bool oracle_ok = true;
  if (cfg.params.contains("expected")) {
    const double expected = param(cfg, "expected", 0.0);
    const double tol = param(cfg, "oracle_tol", 5e-3);
    oracle_ok = std::abs(tab.geodesic.lhs_fd2 - expected) <= tol &&
                std::abs(tab.geodesic.rhs - expected) <= tol;
    geo["expected"] = expected;
    geo["tolerance"] = tol;
  }
  geo["passed"] = oracle_ok;
  const double floor = tab.geodesic.gap;
  const bool limit_ok = tab.rows.back().gap_to_geodesic <= floor_factor * floor;

  CsvTable table{{"epsilon", "fd2", "entropic_rhs", "gap_entropic", "gap_to_geodesic", "iterations"}, {}};
  json rows = json::array();
  for (const auto& r : tab.rows) {
    table.add_row({r.epsilon, r.fd2, r.entropic_rhs, r.gap_entropic, r.gap_to_geodesic, r.iterations});
    json row{{"epsilon", r.epsilon}, {"iterations", r.iterations}};
    add_number(row, "fd2", r.fd2);
    add_number(row, "entropic_rhs", r.entropic_rhs);
    add_number(row, "gap_entropic", r.gap_entropic);
    add_number(row, "gap_to_geodesic", r.gap_to_geodesic);
    rows.push_back(row);
  }
  out.passed = oracle_ok && limit_ok;
  out.data = {{"h", hname}, {"t", t}, {"dt", dt}, {"geodesic", geo}, {"rows", rows},
              {"limit", {{"floor", floor}, {"floor_factor", floor_factor},
                         {"final_gap", tab.rows.back().gap_to_geodesic}, {"passed", limit_ok}}}};
  out.tables.emplace_back("second_order", std::move(table));
  return out;
}

CheckOutcome check_estimates(const ScenarioConfig& cfg) {
  CheckOutcome out{"estimates", true, json::object(), {}, {}};
  const std::vector<int> sizes = int_list(cfg, "grid_sizes");
  const std::vector<double> heat_times = param_list(cfg, "heat_times", {0.1, 0.05});
  const double margin_tol = param(cfg, "margin_tol", -1e-2);
  const double refine_factor = param(cfg, "refine_factor", 2.0);

  CsvTable table{{"n", "t", "hamilton_min", "li_yau_min"}, {}};
  std::vector<double> worst;  // worst violation per grid size, 0 when none
  std::vector<double> minimum;
  for (int n : sizes) {
    const FiniteSpace s = scenario_space(cfg, n);
    const auto [u0, unused] = scenario_densities(cfg, s);
    const HeatSemigroup heat(s);
    const CurvatureParams cp{param(cfg, "K", s.curvature().K), param(cfg, "N", s.curvature().N)};
    double mn = kInf;
    for (double t : heat_times) {
      const double hm = in_module("estimates", [&] { return hamilton_check(heat, u0.values(), t, cp.K).minCoeff(); });
      const double lm = in_module("estimates", [&] { return li_yau_check(heat, u0.values(), t, cp).minCoeff(); });
      table.add_row({long(n), t, hm, lm});
      mn = std::min({mn, hm, lm});
    }
    minimum.push_back(mn);
    worst.push_back(std::max(0.0, -mn));
  }
  const bool margin_ok = minimum.front() >= margin_tol;
  bool refine_ok = true;
  for (std::size_t k = 1; k < worst.size(); ++k)
    if (worst[k - 1] > 0.0 && !(worst[k] * refine_factor <= worst[k - 1])) refine_ok = false;
  out.passed = margin_ok && refine_ok;
  out.data = {{"grid_sizes", sizes}, {"heat_times", heat_times},
              {"min_margin", json_numbers(minimum)}, {"worst_violation", json_numbers(worst)},
              {"margin_tol", margin_tol}, {"margin_passed", margin_ok},
              {"refine_factor", refine_factor}, {"refine_passed", refine_ok}};
  out.tables.emplace_back("estimates", std::move(table));
  return out;
}

CheckOutcome check_kernel(const ScenarioConfig& cfg) {
  CheckOutcome out{"kernel", true, json::object(), {}, {}};
  const FiniteSpace s = scenario_space(cfg);
  const HeatSemigroup heat(s);
  const std::vector<double> times = param_list(cfg, "kernel_times", {0.01, 0.1, 1.0});
  const double tol = param(cfg, "kernel_tol", 1e-10);
  const double semigroup_tol = param(cfg, "semigroup_tol", 1e-9);
  CsvTable table{{"t", "symmetry", "min_entry", "row_sum_error", "semigroup_error"}, {}};
  json rows = json::array();
  const auto& m = s.measure();
  for (double t : times) {
    const Matrix r = heat.kernel(t);
    const Matrix r2 = heat.kernel(2.0 * t);
    const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
    const double sym = (r - r.transpose()).cwiseAbs().maxCoeff() / scale;
    const double mn = r.minCoeff();
    const double rows_err = ((r * m).array() - 1.0).abs().maxCoeff();
    const double sg = (r * m.asDiagonal() * r - r2).cwiseAbs().maxCoeff() / std::max(1.0, r2.cwiseAbs().maxCoeff());
    table.add_row({t, sym, mn, rows_err, sg});
    const bool ok = sym <= tol && mn >= -tol && rows_err <= tol && sg <= semigroup_tol;
    out.passed = out.passed && ok;
    json row{{"t", t}, {"passed", ok}};
    add_number(row, "symmetry", sym);
    add_number(row, "min_entry", mn);
    add_number(row, "row_sum_error", rows_err);
    add_number(row, "semigroup_error", sg);
    rows.push_back(row);
  }
  out.data = {{"tolerance", tol}, {"semigroup_tolerance", semigroup_tol}, {"rows", rows}};
  out.tables.emplace_back("kernel", std::move(table));
  return out;
}

CheckOutcome check_oracle(const ScenarioConfig& cfg) {
  CheckOutcome out{"oracle", true, json::object(), {}, {}};
  const std::vector<double> seeds = param_list(cfg, "seeds", {});
  if (seeds.empty()) throw ConfigError("params.seeds", "required by this check");
  const int points = static_cast<int>(param(cfg, "points", 5));
  const double tol = param(cfg, "tol", 1e-6);
  CsvTable table{{"seed", "epsilon", "entropy_sinkhorn", "entropy_oracle", "objective_gap", "plan_gap"}, {}};
  json rows = json::array();
  for (double seed : seeds) {
    const RandomInstance inst = make_random_instance(static_cast<std::uint64_t>(seed), points);
    const HeatSemigroup heat(inst.space);
    for (double eps : cfg.epsilons) {
      const BridgeProblem prob{inst.rho0, inst.rho1, eps};
      const BridgeSolution sol = in_module("schrodinger_solver", [&] {
        return solve_bridge(heat, prob, {cfg.tolerances.sinkhorn_tol});
      });
      const Matrix logR = log_reference_coupling(inst.space, *sol.log_kernel);
      const Coupling a = entropic_coupling(inst.space, sol);
      const Coupling b = in_module("schrodinger_solver", [&] { return entropy_oracle_min(heat, prob); });
      const double ha = relative_entropy(a, logR), hb = relative_entropy(b, logR);
      const double og = std::abs(ha - hb);
      const double pg = (a.plan - b.plan).cwiseAbs().maxCoeff();
      table.add_row({long(seed), eps, ha, hb, og, pg});
      const bool ok = og <= tol && pg <= tol;
      out.passed = out.passed && ok;
      json row{{"seed", long(seed)}, {"epsilon", eps}, {"passed", ok}};
      add_number(row, "entropy_sinkhorn", ha);
      add_number(row, "entropy_oracle", hb);
      add_number(row, "objective_gap", og);
      add_number(row, "plan_gap", pg);
      rows.push_back(row);
    }
  }
  out.data = {{"points", points}, {"tolerance", tol}, {"rows", rows}};
  out.tables.emplace_back("oracle", std::move(table));
  return out;
}

CheckOutcome check_hopflax(const ScenarioConfig& cfg) {
  CheckOutcome out{"hopflax", true, json::object(), {}, {}};
  const FiniteSpace s = scenario_space(cfg);
  const Vector x = abscissa(s);
  std::mt19937_64 rng(static_cast<std::uint64_t>(param(cfg, "seed", 1)));
  const double amplitude = param(cfg, "amplitude", 0.1);
  Vector f(s.size());
  for (int i = 0; i < s.size(); ++i) f[i] = amplitude * double(rng() >> 11) * 0x1.0p-53;
  const std::vector<double> pairs = param_list(cfg, "time_pairs", {0.1, 0.2, 0.25, 0.25, 0.5, 0.3});
  if (pairs.size() % 2 != 0) throw ConfigError("params.time_pairs", "expected (t, s) pairs");

  CsvTable table{{"t", "s", "max_defect", "violations"}, {}};
  json rows = json::array();
  for (std::size_t k = 0; k < pairs.size(); k += 2) {
    const CompositionCheck c = in_module("ot_oracle", [&] { return hopf_lax_composition(s, f, pairs[k], pairs[k + 1]); });
    table.add_row({pairs[k], pairs[k + 1], c.max_defect, long(c.violations)});
    out.passed = out.passed && c.violations == 0;
    rows.push_back({{"t", pairs[k]}, {"s", pairs[k + 1]}, {"max_defect", json_number(c.max_defect)},
                    {"violations", c.violations}});
  }
  const double t = pairs.front();
  const Vector q = hopf_lax(s, f, t);
  CsvTable values{{"i", "x", "f", "Qtf"}, {}};
  for (int i = 0; i < s.size(); ++i) values.add_row({long(i), x[i], f[i], q[i]});
  out.data = {{"composition", rows}, {"t", t}};
  if (s.is_line()) out.data["hj_residual"] = json_number(hopf_lax_hj_residual(s, f, t, 1e-3));
  out.tables.emplace_back("hopflax_composition", std::move(table));
  out.tables.emplace_back("hopflax", std::move(values));
  return out;
}

CheckOutcome check_ot(const ScenarioConfig& cfg) {
  CheckOutcome out{"ot", true, json::object(), {}, {}};
  const FiniteSpace s = scenario_space(cfg);
  const auto [rho0, rho1] = scenario_densities(cfg, s);
  const TransportPlan lp = in_module("ot_oracle", [&] { return solve_ot_lp(s, rho0, rho1); });
  const double gap = duality_gap(s, rho0, rho1, lp.u);
  const double dual_tol = param(cfg, "dual_tol", 1e-8);
  json data{{"lp_cost", lp.cost}, {"w2", lp.w2()}, {"lp_duality_gap", json_number(gap)}};
  bool ok = std::abs(gap) <= dual_tol;
  if (s.is_line()) {
    const TransportPlan qc = quantile_coupling_1d(s, rho0, rho1);
    data["quantile_cost"] = qc.cost;
    ok = ok && std::abs(qc.cost - lp.cost) <= param(cfg, "cost_tol", 1e-9);
  }
  out.passed = ok;
  out.data = data;
  CsvTable plan{{"i", "j", "mass"}, {}};
  for (int i = 0; i < lp.plan.rows(); ++i)
    for (int j = 0; j < lp.plan.cols(); ++j)
      if (lp.plan(i, j) > 0.0) plan.add_row({long(i), long(j), lp.plan(i, j)});
  CsvTable duals{{"i", "u", "v"}, {}};
  for (int i = 0; i < s.size(); ++i) duals.add_row({long(i), lp.u[i], lp.v[i]});
  out.tables.emplace_back("ot_plan", std::move(plan));
  out.tables.emplace_back("ot_duals", std::move(duals));
  return out;
}

}  // namespace

ScenarioConfig parse_scenario(const json& j) {
  if (!j.is_object()) throw ConfigError("$", "expected a JSON object");
  static const std::set<std::string> allowed{"name", "space", "densities", "epsilons", "times",
                                             "tolerances", "outputs", "checks", "params"};
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError(key, "unknown field");

  ScenarioConfig cfg;
  cfg.raw = j;
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw ConfigError("name", "expected a string");
    cfg.name = j["name"].get<std::string>();
  } else {
    cfg.name = "scenario";
  }

  if (!j.contains("space") || !j["space"].is_object()) throw ConfigError("space", "expected an object");
  cfg.space = j["space"];
  std::optional<FiniteSpace> space;
  try {
    space.emplace(space_from_json(cfg.space));
  } catch (const std::exception& e) {
    throw ConfigError("space", e.what());
  }

  if (!j.contains("densities") || !j["densities"].is_object())
    throw ConfigError("densities", "expected an object with rho0 and rho1");
  for (const char* key : {"rho0", "rho1"}) {
    const std::string field = std::string("densities.") + key;
    if (!j["densities"].contains(key)) throw ConfigError(field, "missing");
    const json& d = j["densities"][key];
    try {
      const Density rho = density_from_json(*space, d);
      require_probability_density(*space, rho, field);
    } catch (const std::exception& e) {
      throw ConfigError(field, e.what());
    }
    (std::string(key) == "rho0" ? cfg.rho0 : cfg.rho1) = d;
  }

  if (j.contains("epsilons")) cfg.epsilons = number_list(j["epsilons"], "epsilons");
  for (std::size_t k = 0; k < cfg.epsilons.size(); ++k) {
    if (!(cfg.epsilons[k] > 0.0)) throw ConfigError("epsilons", "entries must be positive");
    if (k > 0 && !(cfg.epsilons[k] < cfg.epsilons[k - 1]))
      throw ConfigError("epsilons", "entries must be strictly decreasing");
  }

  cfg.times = j.contains("times") ? number_list(j["times"], "times") : std::vector<double>{0.5};
  for (std::size_t k = 0; k < cfg.times.size(); ++k) {
    if (cfg.times[k] < 0.0 || cfg.times[k] > 1.0) throw ConfigError("times", "entries must lie in [0, 1]");
    if (k > 0 && !(cfg.times[k] > cfg.times[k - 1])) throw ConfigError("times", "entries must be sorted");
  }

  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    if (!t.is_object()) throw ConfigError("tolerances", "expected an object");
    auto read = [&](const char* key, double& dst, bool positive) {
      if (!t.contains(key)) return;
      const std::string field = std::string("tolerances.") + key;
      if (!t[key].is_number()) throw ConfigError(field, "expected a number");
      dst = t[key].get<double>();
      if (positive && !(dst > 0.0)) throw ConfigError(field, "must be positive");
    };
    read("sinkhorn_tol", cfg.tolerances.sinkhorn_tol, true);
    read("fd_dt", cfg.tolerances.fd_dt, true);
    read("window_delta", cfg.tolerances.window_delta, false);
    read("path_residual", cfg.tolerances.path_residual, false);
    if (!(cfg.tolerances.window_delta >= 0.0 && cfg.tolerances.window_delta < 0.5))
      throw ConfigError("tolerances.window_delta", "must lie in [0, 0.5)");
  }

  if (j.contains("outputs")) {
    if (!j["outputs"].is_string()) throw ConfigError("outputs", "expected a directory path");
    cfg.outputs = j["outputs"].get<std::string>();
  }

  if (j.contains("checks")) {
    if (!j["checks"].is_array()) throw ConfigError("checks", "expected an array of names");
    for (std::size_t k = 0; k < j["checks"].size(); ++k) {
      const json& c = j["checks"][k];
      const std::string field = "checks[" + std::to_string(k) + "]";
      if (!c.is_string()) throw ConfigError(field, "expected a string");
      const auto& known = known_checks();
      if (std::find(known.begin(), known.end(), c.get<std::string>()) == known.end())
        throw ConfigError(field, "unknown check \"" + c.get<std::string>() + "\"");
      cfg.checks.push_back(c.get<std::string>());
    }
  }

  if (j.contains("params")) {
    if (!j["params"].is_object()) throw ConfigError("params", "expected an object");
    cfg.params = j["params"];
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw ScenarioFileNotFound(path);
  std::ifstream in(path);
  if (!in) throw ScenarioFileNotFound(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("malformed JSON in ") + path + ": " + e.what());
  }
  return parse_scenario(j);
}

FiniteSpace scenario_space(const ScenarioConfig& cfg) { return space_from_json(cfg.space); }

FiniteSpace scenario_space(const ScenarioConfig& cfg, int n) {
  json j = cfg.space;
  const std::string kind = j.value("kind", std::string());
  if (kind != "interval" && kind != "circle") throw ConfigError("space.kind", "grid size override needs a grid");
  j["n"] = n;
  return space_from_json(j);
}

std::pair<Density, Density> scenario_densities(const ScenarioConfig& cfg, const FiniteSpace& s) {
  return {density_from_json(s, cfg.rho0), density_from_json(s, cfg.rho1)};
}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{"bridge", "path", "entropy", "refinement",
                                              "sweep", "second_order", "estimates", "kernel",
                                              "oracle", "hopflax", "ot"};
  return names;
}

CheckOutcome run_check(const ScenarioConfig& cfg, const std::string& name) {
  static const std::set<std::string> needs_epsilons{"bridge", "path", "entropy", "refinement",
                                                    "sweep", "second_order", "oracle"};
  if (needs_epsilons.count(name) && cfg.epsilons.empty())
    throw ConfigError("epsilons", "required by check \"" + name + "\"");
  if (name == "bridge") return check_bridge(cfg);
  if (name == "path") return check_path(cfg);
  if (name == "entropy") return check_entropy(cfg);
  if (name == "refinement") return check_refinement(cfg);
  if (name == "sweep") return check_sweep(cfg);
  if (name == "second_order") return check_second_order(cfg);
  if (name == "estimates") return check_estimates(cfg);
  if (name == "kernel") return check_kernel(cfg);
  if (name == "oracle") return check_oracle(cfg);
  if (name == "hopflax") return check_hopflax(cfg);
  if (name == "ot") return check_ot(cfg);
  throw ConfigError("checks", "unknown check \"" + name + "\"");
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::vector<std::string>& checks) {
  const std::vector<std::string>& names = checks.empty() ? cfg.checks : checks;
  if (names.empty()) throw ConfigError("checks", "no checks to run");

  ScenarioResult res;
  res.out_dir = output_directory(cfg.outputs);
  namespace fs = std::filesystem;
  json results = json::array();
  for (const std::string& name : names) {
    CheckOutcome c = run_check(cfg, name);
    res.passed = res.passed && c.passed;
    json files = json::array();
    for (const auto& [stem, table] : c.tables) {
      const std::string path = (fs::path(res.out_dir) / (cfg.name + "_" + stem + ".csv")).string();
      write_csv(path, table);
      res.files.push_back(path);
      files.push_back(fs::path(path).filename().string());
    }
    for (const auto& [stem, svg] : c.svgs) {
      const std::string path = (fs::path(res.out_dir) / (cfg.name + "_" + stem + ".svg")).string();
      fs::create_directories(res.out_dir);
      std::ofstream(path, std::ios::binary) << svg;
      res.files.push_back(path);
      files.push_back(fs::path(path).filename().string());
    }
    results.push_back({{"check", c.name}, {"passed", c.passed}, {"data", c.data}, {"files", files}});
  }
  res.report = {{"scenario", cfg.name}, {"config", cfg.raw}, {"passed", res.passed}, {"checks", results}};
  const std::string path = (fs::path(res.out_dir) / (cfg.name + "_report.json")).string();
  write_json(path, res.report);
  res.files.push_back(path);
  return res;
}

RandomInstance make_random_instance(std::uint64_t seed, int points) {
  if (points < 2) throw std::invalid_argument("make_random_instance: need at least 2 points");
  std::mt19937_64 rng(seed);
  auto uniform = [&](double a, double b) { return a + (b - a) * (double(rng() >> 11) * 0x1.0p-53); };
  std::vector<Edge> edges;
  for (int i = 0; i < points; ++i) edges.push_back({i, (i + 1) % points, uniform(0.5, 2.0), std::nullopt});
  if (points == 2) edges.pop_back();
  for (int i = 0; i < points; ++i)
    for (int j = i + 2; j < points; ++j)
      if (!(i == 0 && j == points - 1) && uniform(0.0, 1.0) < 0.5)
        edges.push_back({i, j, uniform(0.5, 2.0), std::nullopt});
  Vector m(points), w0(points), w1(points);
  for (int i = 0; i < points; ++i) m[i] = uniform(0.5, 1.5);
  for (int i = 0; i < points; ++i) w0[i] = uniform(0.1, 1.0);
  for (int i = 0; i < points; ++i) w1[i] = uniform(0.1, 1.0);
  FiniteSpace s = build_weighted_graph(edges, m);
  Density r0 = normalized_density(s, w0);
  Density r1 = normalized_density(s, w1);
  return {std::move(s), std::move(r0), std::move(r1)};
}

}  // namespace entbridge
