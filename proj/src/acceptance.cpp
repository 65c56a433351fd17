#include "entbridge/acceptance.hpp"

#include "entbridge/estimates.hpp"
#include "entbridge/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

namespace entbridge {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::vector<std::pair<const char*, double AcceptanceTolerances::*>> double_fields() {
  using T = AcceptanceTolerances;
  return {{"schrodinger_residual", &T::schrodinger_residual},
          {"schrodinger_seconds", &T::schrodinger_seconds},
          {"oracle_objective", &T::oracle_objective},
          {"oracle_plan", &T::oracle_plan},
          {"gauge_coupling", &T::gauge_coupling},
          {"gauge_normalization", &T::gauge_normalization},
          {"ode_ratio_lo", &T::ode_ratio_lo},
          {"ode_ratio_hi", &T::ode_ratio_hi},
          {"refinement_min_order", &T::refinement_min_order},
          {"refinement_target_order", &T::refinement_target_order},
          {"vanishing_final_fraction", &T::vanishing_final_fraction},
          {"bounded_spread", &T::bounded_spread},
          {"metric_grid_factor", &T::metric_grid_factor},
          {"second_order_oracle", &T::second_order_oracle},
          {"second_order_floor_factor", &T::second_order_floor_factor},
          {"estimate_margin", &T::estimate_margin},
          {"estimate_refine_factor", &T::estimate_refine_factor},
          {"kernel_tol", &T::kernel_tol},
          {"semigroup_tol", &T::semigroup_tol},
          {"runtime_target_seconds", &T::runtime_target_seconds}};
}

// Shared state: scenario files are read once, the sweep feeds three criteria.
struct Suite {
  const AcceptanceOptions& opt;
  const AcceptanceTolerances& tol;
  std::map<std::string, ScenarioConfig> configs;
  std::optional<ConvergenceReport> sweep;
  double sweep_spacing = 0.0;
  double sweep_seconds = 0.0;

  const ScenarioConfig& cfg(const std::string& file) const { return configs.at(file); }

  const ConvergenceReport& sweep_report() {
    if (!sweep) {
      const auto t0 = Clock::now();
      const ScenarioConfig& c = cfg("sweep.json");
      const FiniteSpace s = scenario_space(c);
      const auto [r0, r1] = scenario_densities(c, s);
      const HeatSemigroup heat(s);
      SweepOptions so;
      so.delta = c.tolerances.window_delta;
      so.window_level = c.params.value("window_level", so.window_level);
      so.quadrature_nodes = c.params.value("quadrature_nodes", so.quadrature_nodes);
      so.sinkhorn.tol = c.tolerances.sinkhorn_tol;
      sweep = epsilon_sweep(heat, r0, r1, c.epsilons, c.times, so);
      sweep_spacing = s.spacing();
      sweep_seconds = seconds_since(t0);
    }
    return *sweep;
  }
};

CriterionResult c1_schrodinger(Suite& S) {
  CriterionResult r{1, "Schrodinger system residual", true, "", {}, 0.0};
  const ScenarioConfig& c = S.cfg("bumps64.json");
  const FiniteSpace s = scenario_space(c);
  const auto [r0, r1] = scenario_densities(c, s);
  const HeatSemigroup heat(s);
  std::ostringstream os;
  for (double eps : c.epsilons) {
    const auto t0 = Clock::now();
    try {
      const BridgeSolution sol =
          solve_bridge(heat, {r0, r1, eps}, {c.tolerances.sinkhorn_tol, S.tol.schrodinger_max_iter});
      const double sec = seconds_since(t0);
      const bool ok = sol.marginal_residual <= S.tol.schrodinger_residual &&
                      sol.iterations <= S.tol.schrodinger_max_iter && sec <= S.tol.schrodinger_seconds;
      r.passed = r.passed && ok;
      os << "eps=" << eps << " res=" << fmt(sol.marginal_residual) << " it=" << sol.iterations
         << " " << fmt(sec) << "s; ";
    } catch (const NoConvergence& e) {
      r.passed = false;
      os << "eps=" << eps << " no convergence (" << e.what() << "); ";
    }
  }
  r.detail = os.str() + "bound " + fmt(S.tol.schrodinger_residual) + " in " +
             fmt(S.tol.schrodinger_seconds) + "s";
  return r;
}

CriterionResult c2_oracle(Suite& S) {
  CriterionResult r{2, "entropy-minimality oracle", true, "", {}, 0.0};
  const ScenarioConfig& c = S.cfg("oracle5.json");
  const int points = c.params.value("points", 5);
  double worst_obj = 0.0, worst_plan = 0.0;
  int instances = 0;
  for (const auto& seed : c.params.at("seeds")) {
    const RandomInstance inst = make_random_instance(seed.get<std::uint64_t>(), points);
    const HeatSemigroup heat(inst.space);
    for (double eps : c.epsilons) {
      const BridgeProblem prob{inst.rho0, inst.rho1, eps};
      const BridgeSolution sol = solve_bridge(heat, prob, {c.tolerances.sinkhorn_tol});
      const Matrix logR = log_reference_coupling(inst.space, *sol.log_kernel);
      const Coupling a = entropic_coupling(inst.space, sol);
      const Coupling b = entropy_oracle_min(heat, prob);
      worst_obj = std::max(worst_obj, std::abs(relative_entropy(a, logR) - relative_entropy(b, logR)));
      worst_plan = std::max(worst_plan, (a.plan - b.plan).cwiseAbs().maxCoeff());
      ++instances;
    }
  }
  r.passed = worst_obj <= S.tol.oracle_objective && worst_plan <= S.tol.oracle_plan;
  r.detail = std::to_string(instances) + " instances, objective gap " + fmt(worst_obj) +
             ", plan gap " + fmt(worst_plan) + " (bounds " + fmt(S.tol.oracle_objective) + ", " +
             fmt(S.tol.oracle_plan) + ")";
  return r;
}

CriterionResult c3_gauge(Suite& S) {
  CriterionResult r{3, "gauge invariance", true, "", {}, 0.0};
  const ScenarioConfig& c = S.cfg("bumps64.json");
  const FiniteSpace s = scenario_space(c);
  const auto [r0, r1] = scenario_densities(c, s);
  const HeatSemigroup heat(s);
  double dplan = 0.0, dnorm = 0.0;
  for (double eps : c.epsilons) {
    const BridgeSolution sol = solve_bridge(heat, {r0, r1, eps}, {c.tolerances.sinkhorn_tol});
    const BridgeSolution scaled = rescale_bridge(sol, 10.0);
    dplan = std::max(dplan, (entropic_coupling(s, sol).plan - entropic_coupling(s, scaled).plan)
                                .cwiseAbs()
                                .maxCoeff());
    const BridgeSolution fixed = normalize_bridge(heat, scaled, r1);
    dnorm = std::max(dnorm, std::abs(normalization_residual(heat, fixed, r1)));
  }
  r.passed = dplan <= S.tol.gauge_coupling && dnorm <= S.tol.gauge_normalization;
  r.detail = "coupling change " + fmt(dplan) + " (bound " + fmt(S.tol.gauge_coupling) +
             "), normalization residual " + fmt(dnorm) + " (bound " +
             fmt(S.tol.gauge_normalization) + ")";
  return r;
}

CriterionResult c4_ode(Suite& S) {
  CriterionResult r{4, "exact density ODE", true, "", {}, 0.0};
  const ScenarioConfig& c = S.cfg("gauss1d.json");
  const FiniteSpace s = scenario_space(c);
  const auto [r0, r1] = scenario_densities(c, s);
  const HeatSemigroup heat(s);
  const EntropicPath path(heat, solve_bridge(heat, {r0, r1, c.epsilons.front()}, {c.tolerances.sinkhorn_tol}));
  const double coarse = density_ode_residual(path, 0.5, 2e-3);
  const double fine = density_ode_residual(path, 0.5, 1e-3);
  const double ratio = coarse / fine;
  r.passed = ratio >= S.tol.ode_ratio_lo && ratio <= S.tol.ode_ratio_hi;
  r.detail = "residual " + fmt(coarse) + " -> " + fmt(fine) + ", ratio " + fmt(ratio) + " (band [" +
             fmt(S.tol.ode_ratio_lo) + ", " + fmt(S.tol.ode_ratio_hi) + "])";
  return r;
}

CriterionResult c5_refinement(Suite& S) {
  CriterionResult r{5, "refinement orders", true, "", {}, 0.0};
  const CheckOutcome out = run_check(S.cfg("gauss1d.json"), "refinement");
  std::ostringstream os;
  for (const auto& rep : out.data["reports"]) {
    const std::string name = rep["name"];
    const double order = rep["fitted_order"].is_null() ? -kInf : rep["fitted_order"].get<double>();
    r.passed = r.passed && order >= S.tol.refinement_min_order;
    os << name << " " << fmt(order) << "; ";
    if (name != "d2H_gap")
      r.info.push_back(name + ": target order " + fmt(S.tol.refinement_target_order) +
                       (order >= S.tol.refinement_target_order ? " met" : " missed"));
    std::ostringstream res;
    for (const auto& v : rep["residual_norms"]) res << " " << fmt(v.is_null() ? kInf : v.get<double>());
    r.info.push_back(name + " residuals:" + res.str());
  }
  r.detail = os.str() + "minimum " + fmt(S.tol.refinement_min_order);
  return r;
}

CriterionResult c6_vanishing(Suite& S) {
  CriterionResult r{6, "vanishing quantities", true, "", {}, 0.0};
  const ConvergenceReport& rep = S.sweep_report();
  const auto& rows = rep.vanishing.rows;
  std::ostringstream os;
  const std::pair<const char*, double VanishingRow::*> cols[] = {
      {"laplacian", &VanishingRow::laplacian},
      {"gradient", &VanishingRow::gradient},
      {"mixed", &VanishingRow::mixed},
      {"gradient_cubed", &VanishingRow::gradient_cubed}};
  for (const auto& [name, col] : cols) {
    bool dec = true;
    for (std::size_t k = 1; k < rows.size(); ++k) dec = dec && rows[k].*col < rows[k - 1].*col;
    const double frac = rows.back().*col / (rows.front().*col);
    const bool ok = dec && frac <= S.tol.vanishing_final_fraction;
    r.passed = r.passed && ok;
    os << name << (dec ? " decreasing" : " NOT decreasing") << " final/first " << fmt(frac) << "; ";
  }
  const double es = rep.vanishing.energy_spread(), ts = rep.vanishing.theta_laplacian_spread();
  r.passed = r.passed && es < S.tol.bounded_spread && ts < S.tol.bounded_spread;
  os << "bounded spreads " << fmt(es) << ", " << fmt(ts) << " (< " << fmt(S.tol.bounded_spread) << ")";
  r.detail = os.str();
  std::ostringstream en;
  for (double e : rep.energies) en << " " << fmt(e);
  r.info.push_back("window energies" + en.str() + " against W2^2 " + fmt(rep.geodesic_energy));
  r.info.push_back("sweep runtime " + fmt(S.sweep_seconds) + "s");
  return r;
}

CriterionResult c7_geodesic(Suite& S) {
  CriterionResult r{7, "geodesic convergence", true, "", {}, 0.0};
  const ConvergenceReport& rep = S.sweep_report();
  const double bound = S.tol.metric_grid_factor * S.sweep_spacing;
  r.passed = rep.metric_decreasing() && rep.metric_errors.back() <= bound;
  std::ostringstream os;
  os << "sup_t W2:";
  for (double v : rep.metric_errors) os << " " << fmt(v);
  os << (rep.metric_decreasing() ? " (decreasing)" : " (NOT decreasing)") << ", final "
     << fmt(rep.metric_errors.back()) << " vs " << fmt(S.tol.metric_grid_factor) << "h = " << fmt(bound);
  r.detail = os.str();
  return r;
}

CriterionResult c8_hopf_lax(Suite& S) {
  CriterionResult r{8, "Hopf-Lax relation", true, "", {}, 0.0};
  const ConvergenceReport& rep = S.sweep_report();
  std::ostringstream os;
  os << "potential errors:";
  for (double v : rep.potential_errors) os << " " << fmt(v);
  os << (rep.potential_decreasing() ? " (decreasing)" : " (NOT decreasing)");

  // Exact composition inequality on every shipped space and on the random oracle graphs.
  std::vector<FiniteSpace> spaces;
  std::set<std::string> seen;
  for (const auto& [file, c] : S.configs)
    if (seen.insert(c.space.dump()).second) spaces.push_back(scenario_space(c));
  const ScenarioConfig& oc = S.cfg("oracle5.json");
  for (const auto& seed : oc.params.at("seeds"))
    spaces.push_back(make_random_instance(seed.get<std::uint64_t>(), oc.params.value("points", 5)).space);
  std::mt19937_64 rng(20240611);
  int violations = 0;
  double defect = 0.0;
  const double pairs[][2] = {{0.1, 0.2}, {0.25, 0.25}, {0.5, 0.3}, {1.0, 0.05}};
  for (const FiniteSpace& s : spaces)
    for (double amplitude : {0.1, 1.0}) {
      Vector f(s.size());
      for (int i = 0; i < s.size(); ++i) f[i] = amplitude * double(rng() >> 11) * 0x1.0p-53;
      for (const auto& p : pairs) {
        const CompositionCheck cc = hopf_lax_composition(s, f, p[0], p[1]);
        violations += cc.violations;
        defect = std::max(defect, cc.max_defect);
      }
    }
  r.passed = rep.potential_decreasing() && violations == 0;
  os << "; composition violations " << violations << " on " << spaces.size() << " spaces";
  r.detail = os.str();
  r.info.push_back("largest composition defect Q_t Q_s f - Q_{t+s} f = " + fmt(defect));
  r.info.push_back("comparison window points [" + std::to_string(rep.window_points.first) + ", " +
                   std::to_string(rep.window_points.second) + "], gauge point " +
                   std::to_string(rep.reference_point));
  return r;
}

struct SecondOrderRun {
  SecondOrderLimitTable table;
  double expected = 0.0;
};

SecondOrderRun second_order_run(const ScenarioConfig& c) {
  const FiniteSpace s = scenario_space(c);
  const auto [r0, r1] = scenario_densities(c, s);
  const HeatSemigroup heat(s);
  const Vector& x = *s.coords();
  return {second_order_limit_check(heat, r0, r1, c.epsilons, x.cwiseAbs2(),
                                   Vector::Constant(s.size(), 2.0), c.params.value("t", 0.5),
                                   c.params.value("dt", 0.1), {c.tolerances.sinkhorn_tol}),
          c.params.at("expected").get<double>()};
}

CriterionResult c9_second_order(Suite& S) {
  CriterionResult r{9, "second-order differentiation formula", true, "", {}, 0.0};
  auto summarize = [&](const SecondOrderRun& run, bool& a_ok, bool& b_ok) {
    const SecondOrderCheck& g = run.table.geodesic;
    a_ok = std::abs(g.lhs_fd2 - run.expected) <= S.tol.second_order_oracle &&
           std::abs(g.rhs - run.expected) <= S.tol.second_order_oracle;
    const double floor = g.gap;
    const double final_gap = run.table.rows.back().gap_to_geodesic;
    b_ok = final_gap <= S.tol.second_order_floor_factor * floor;
    std::ostringstream os;
    os << "(a) lhs " << fmt(g.lhs_fd2) << " rhs " << fmt(g.rhs) << " vs " << fmt(run.expected) << " +- "
       << fmt(S.tol.second_order_oracle) << (a_ok ? " ok" : " FAIL") << "; (b) gap at eps "
       << fmt(run.table.rows.back().epsilon) << " = " << fmt(final_gap) << " vs "
       << fmt(S.tol.second_order_floor_factor) << " x floor " << fmt(floor) << (b_ok ? " ok" : " FAIL");
    return os.str();
  };
  bool a = false, b = false;
  r.detail = summarize(second_order_run(S.cfg("second_order.json")), a, b);
  r.passed = a && b;

  const SecondOrderRun shifted = second_order_run(S.cfg("second_order_shifted.json"));
  bool sa = false, sb = false;
  r.info.push_back("same pair on [-0.45, 0.55]: " + summarize(shifted, sa, sb));
  std::ostringstream gaps;
  for (const auto& row : shifted.table.rows) gaps << " " << fmt(row.epsilon) << ":" << fmt(row.gap_to_geodesic);
  r.info.push_back("shifted gap_to_geodesic by eps:" + gaps.str());
  return r;
}

CriterionResult c10_estimates(Suite& S) {
  CriterionResult r{10, "Hamilton and Li-Yau", true, "", {}, 0.0};
  const CheckOutcome out = run_check(S.cfg("estimates.json"), "estimates");
  const auto sizes = out.data["grid_sizes"].get<std::vector<int>>();
  std::vector<double> mins;
  for (const auto& v : out.data["min_margin"]) mins.push_back(v.is_null() ? -kInf : v.get<double>());
  const double w0 = std::max(0.0, -mins.front()), w1 = std::max(0.0, -mins.back());
  const bool margin_ok = mins.front() >= S.tol.estimate_margin;
  // With no violation on the coarse grid there is nothing left to reduce.
  const bool refine_ok = w0 == 0.0 ? w1 == 0.0 : w1 * S.tol.estimate_refine_factor <= w0;
  r.passed = margin_ok && refine_ok;
  r.detail = "min margin n=" + std::to_string(sizes.front()) + " " + fmt(mins.front()) + " (bound " +
             fmt(S.tol.estimate_margin) + "), n=" + std::to_string(sizes.back()) + " " +
             fmt(mins.back()) + "; worst violation " + fmt(w0) + " -> " + fmt(w1);
  return r;
}

CriterionResult c11_kernel(Suite& S) {
  CriterionResult r{11, "heat-kernel sanity", true, "", {}, 0.0};
  std::set<std::string> seen;
  double sym = 0.0, neg = 0.0, rows = 0.0, sg = 0.0;
  int count = 0;
  for (const auto& [file, c] : S.configs) {
    if (!seen.insert(c.space.dump()).second) continue;
    const FiniteSpace s = scenario_space(c);
    const HeatSemigroup heat(s);
    const Vector& m = s.measure();
    for (double t : {0.01, 0.1, 1.0}) {
      const Matrix k = heat.kernel(t);
      const Matrix k2 = heat.kernel(2.0 * t);
      sym = std::max(sym, (k - k.transpose()).cwiseAbs().maxCoeff() / std::max(1.0, k.cwiseAbs().maxCoeff()));
      neg = std::max(neg, -k.minCoeff());
      rows = std::max(rows, ((k * m).array() - 1.0).abs().maxCoeff());
      sg = std::max(sg, (k * m.asDiagonal() * k - k2).cwiseAbs().maxCoeff() /
                            std::max(1.0, k2.cwiseAbs().maxCoeff()));
    }
    ++count;
  }
  r.passed = sym <= S.tol.kernel_tol && neg <= S.tol.kernel_tol && rows <= S.tol.kernel_tol &&
             sg <= S.tol.semigroup_tol;
  r.detail = std::to_string(count) + " spaces: asymmetry " + fmt(sym) + ", negativity " +
             fmt(std::max(0.0, neg)) + ", row-sum " + fmt(rows) + " (bound " + fmt(S.tol.kernel_tol) +
             "), semigroup " + fmt(sg) + " (bound " + fmt(S.tol.semigroup_tol) + ")";
  return r;
}

}  // namespace

AcceptanceTolerances AcceptanceTolerances::from_json(const json& j) {
  AcceptanceTolerances t;
  if (!j.is_object()) throw std::invalid_argument("tolerances: expected a JSON object");
  const auto fields = double_fields();
  for (const auto& [key, value] : j.items()) {
    if (key == "schrodinger_max_iter") {
      if (!value.is_number_integer()) throw std::invalid_argument("tolerances.schrodinger_max_iter: expected an integer");
      t.schrodinger_max_iter = value.get<long>();
      continue;
    }
    const auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return key == f.first; });
    if (it == fields.end()) throw std::invalid_argument("tolerances." + key + ": unknown field");
    if (!value.is_number()) throw std::invalid_argument("tolerances." + key + ": expected a number");
    t.*(it->second) = value.get<double>();
  }
  return t;
}

json AcceptanceTolerances::to_json() const {
  json j{{"schrodinger_max_iter", schrodinger_max_iter}};
  for (const auto& [key, member] : double_fields()) j[key] = this->*member;
  return j;
}

const std::vector<std::string>& acceptance_scenarios() {
  static const std::vector<std::string> files{
      "bumps64.json",      "oracle5.json",       "gauss1d.json",
      "sweep.json",        "second_order.json",  "second_order_shifted.json",
      "estimates.json",    "uniform.json",       "circle.json",
      "graph.json"};
  return files;
}

std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& options, const std::function<void(const CriterionResult&)>& on_result) {
  const std::string dir = options.scenario_dir.empty() ? ENTBRIDGE_SCENARIO_DIR : options.scenario_dir;
  Suite S{options, options.tolerances, {}, std::nullopt, 0.0, 0.0};
  for (const std::string& f : acceptance_scenarios())
    S.configs.emplace(f, load_scenario((std::filesystem::path(dir) / f).string()));

  using Fn = CriterionResult (*)(Suite&);
  const Fn criteria[] = {c1_schrodinger, c2_oracle,  c3_gauge,       c4_ode,
                         c5_refinement,  c6_vanishing, c7_geodesic,  c8_hopf_lax,
                         c9_second_order, c10_estimates, c11_kernel};
  std::vector<CriterionResult> results;
  int id = 0;
  for (Fn fn : criteria) {
    ++id;
    if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), id) == options.only.end())
      continue;
    const auto t0 = Clock::now();
    CriterionResult r;
    try {
      r = fn(S);
    } catch (const ScenarioFileNotFound&) {
      throw;
    } catch (const std::exception& e) {
      r = {id, "criterion " + std::to_string(id), false, std::string("error: ") + e.what(), {}, 0.0};
    }
    r.seconds = seconds_since(t0);
    results.push_back(r);
    if (on_result) on_result(r);
  }
  return results;
}

std::string format_criterion(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.passed ? "PASS" : "FAIL") << "  [" << r.id << "] " << r.name << ": " << r.detail << " ("
     << fmt(r.seconds) << "s)";
  for (const auto& line : r.info) os << "\n        " << line;
  return os.str();
}

int verify_all(const AcceptanceOptions& options, std::ostream& out) {
  const auto t0 = Clock::now();
  const auto results = run_acceptance(options, [&](const CriterionResult& r) {
    out << format_criterion(r) << std::endl;
  });
  const long failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.passed; });
  const double total = seconds_since(t0);
  out << (failed ? "FAILED " : "OK ") << results.size() - failed << "/" << results.size()
      << " criteria passed in " << fmt(total) << "s (target " << fmt(options.tolerances.runtime_target_seconds)
      << "s)" << std::endl;
  return failed ? 1 : 0;
}

}  // namespace entbridge
