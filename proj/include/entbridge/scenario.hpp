#pragma once

#include "entbridge/report.hpp"
#include "entbridge/space.hpp"

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace entbridge {

/// Invalid scenario configuration; field() names the offending JSON path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& msg)
      : std::runtime_error("config error at " + field + ": " + msg), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class ScenarioFileNotFound : public std::runtime_error {
 public:
  explicit ScenarioFileNotFound(const std::string& path)
      : std::runtime_error("scenario file not found: " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Failure raised inside a numerical module, tagged with that module's name.
class ModuleError : public std::runtime_error {
 public:
  ModuleError(const std::string& module, const std::string& msg)
      : std::runtime_error(module + ": " + msg), module_(module) {}
  const std::string& module() const { return module_; }

 private:
  std::string module_;
};

struct ScenarioTolerances {
  double sinkhorn_tol = 1e-10;
  double fd_dt = 1e-3;
  double window_delta = 0.2;
  double path_residual = -1.0;  // negative: residuals are reported without a bound
};

struct ScenarioConfig {
  nlohmann::json raw;  // the document as read, embedded in every report
  std::string name;
  nlohmann::json space;
  nlohmann::json rho0;
  nlohmann::json rho1;
  std::vector<double> epsilons;
  std::vector<double> times;
  ScenarioTolerances tolerances;
  std::string outputs = "out";
  std::vector<std::string> checks;
  nlohmann::json params = nlohmann::json::object();
};

/// Validates and unpacks a scenario document. Throws ConfigError.
ScenarioConfig parse_scenario(const nlohmann::json& j);
/// Throws ScenarioFileNotFound, ConfigError.
ScenarioConfig load_scenario(const std::string& path);

FiniteSpace scenario_space(const ScenarioConfig& cfg);
/// The space block with its grid size replaced (interval and circle only).
FiniteSpace scenario_space(const ScenarioConfig& cfg, int n);
std::pair<Density, Density> scenario_densities(const ScenarioConfig& cfg, const FiniteSpace& s);

/// Checks understood by run_check().
const std::vector<std::string>& known_checks();

struct CheckOutcome {
  std::string name;
  bool passed = true;
  nlohmann::json data;
  std::vector<std::pair<std::string, CsvTable>> tables;   // file stem, table
  std::vector<std::pair<std::string, std::string>> svgs;  // file stem, document
};

/// Throws ConfigError for bad check parameters and ModuleError for numerical failures.
CheckOutcome run_check(const ScenarioConfig& cfg, const std::string& name);

struct ScenarioResult {
  bool passed = true;
  nlohmann::json report;
  std::string out_dir;
  std::vector<std::string> files;
};

/// Runs the listed checks (cfg.checks when empty) and writes
/// <out>/<name>_report.json plus one CSV per table.
ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::vector<std::string>& checks = {});

/// Random 5-point style instance: ring plus chords, random rates, measure and densities.
struct RandomInstance {
  FiniteSpace space;
  Density rho0;
  Density rho1;
};
RandomInstance make_random_instance(std::uint64_t seed, int points);

}  // namespace entbridge
