#pragma once

#include <json.hpp>

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace entbridge {

/// Pinned thresholds of the acceptance suite. Any field can be overridden from JSON.
struct AcceptanceTolerances {
  double schrodinger_residual = 1e-10;
  long schrodinger_max_iter = 100000;
  double schrodinger_seconds = 10.0;
  double oracle_objective = 1e-6;
  double oracle_plan = 1e-6;
  double gauge_coupling = 1e-12;
  double gauge_normalization = 1e-12;
  double ode_ratio_lo = 3.5;
  double ode_ratio_hi = 4.5;
  double refinement_min_order = 1.0;
  double refinement_target_order = 1.5;
  double vanishing_final_fraction = 0.25;
  double bounded_spread = 10.0;
  double metric_grid_factor = 2.0;
  double second_order_oracle = 5e-3;
  double second_order_floor_factor = 3.0;
  double estimate_margin = -1e-2;
  double estimate_refine_factor = 2.0;
  double kernel_tol = 1e-10;
  double semigroup_tol = 1e-9;
  double runtime_target_seconds = 180.0;

  /// Unknown keys are rejected with std::invalid_argument.
  static AcceptanceTolerances from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  std::vector<std::string> info;  // context lines that do not affect the verdict
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::string scenario_dir;  // defaults to the shipped scenarios/ directory
  AcceptanceTolerances tolerances;
  std::vector<int> only;  // criterion ids to run; empty runs all
};

/// Scenario files read by the suite, relative to the scenario directory.
const std::vector<std::string>& acceptance_scenarios();

/// Runs all criteria in order; on_result sees each result as soon as it is known.
/// Throws ScenarioFileNotFound before any work when a scenario file is missing.
std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& options,
    const std::function<void(const CriterionResult&)>& on_result = {});

/// "PASS  [n] name: detail" followed by indented info lines.
std::string format_criterion(const CriterionResult& r);

/// Prints one line per criterion and a summary; returns 0 when all pass, 1 otherwise.
int verify_all(const AcceptanceOptions& options, std::ostream& out);

}  // namespace entbridge
