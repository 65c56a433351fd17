#include "entbridge/acceptance.hpp"
#include "entbridge/scenario.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace entbridge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = ENTBRIDGE_SCENARIO_DIR;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json read_scenario_json(const std::string& name) { return json::parse(read_file(kScenarios + "/" + name)); }

std::string temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("entbridge_test_" + tag);
  fs::remove_all(p);
  return p.string();
}

std::string config_error_field(const json& j) {
  try {
    parse_scenario(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("every shipped scenario parses") {
  for (const auto& entry : fs::directory_iterator(kScenarios))
    if (entry.path().extension() == ".json") CHECK_NOTHROW(load_scenario(entry.path().string()));
  for (const auto& f : acceptance_scenarios()) CHECK(fs::exists(kScenarios + "/" + f));
}

TEST_CASE("validation errors name the offending field") {
  json j = read_scenario_json("sweep.json");
  j["epsilons"] = {0.05, 0.1};
  CHECK(config_error_field(j) == "epsilons");
  j = read_scenario_json("sweep.json");
  j["epsilons"] = {0.1, -0.05};
  CHECK(config_error_field(j) == "epsilons");
  j = read_scenario_json("sweep.json");
  j["times"] = {0.5, 0.25};
  CHECK(config_error_field(j) == "times");
  j = read_scenario_json("sweep.json");
  j["checks"] = {"sweep", "nonsense"};
  CHECK(config_error_field(j) == "checks[1]");
  j = read_scenario_json("sweep.json");
  j["densities"]["rho1"] = {{"kind", "lognormal"}};
  CHECK(config_error_field(j) == "densities.rho1");
  j = read_scenario_json("sweep.json");
  j["tolerances"]["window_delta"] = 0.7;
  CHECK(config_error_field(j) == "tolerances.window_delta");
  j = read_scenario_json("sweep.json");
  j["colour"] = "blue";
  CHECK(config_error_field(j) == "colour");
  j = read_scenario_json("sweep.json");
  j["space"]["kind"] = "torus";
  CHECK(config_error_field(j) == "space");
  CHECK(config_error_field(json::array()) == "$");
}

TEST_CASE("missing scenario file reports its path") {
  const std::string path = "/nonexistent/dir/scenario.json";
  try {
    load_scenario(path);
    FAIL("expected ScenarioFileNotFound");
  } catch (const ScenarioFileNotFound& e) {
    CHECK(std::string(e.what()) == "scenario file not found: " + path);
  }
  AcceptanceOptions opt;
  opt.scenario_dir = "/nonexistent/dir";
  CHECK_THROWS_AS(run_acceptance(opt), ScenarioFileNotFound);
}

TEST_CASE("uniform endpoints: all checks pass and every residual column is tiny") {
  ScenarioConfig cfg = load_scenario(kScenarios + "/uniform.json");
  cfg.outputs = temp_dir("uniform");
  const ScenarioResult res = run_scenario(cfg);
  CHECK(res.passed);
  for (const auto& c : res.report["checks"]) {
    CHECK(c["passed"].get<bool>());
    if (c["check"] == "bridge")
      for (const auto& row : c["data"]["rows"]) CHECK(row["marginal_residual"].get<double>() <= 1e-10);
    if (c["check"] == "path")
      for (const auto& row : c["data"]["rows"])
        for (const char* k : {"density_ode", "hjb_phi", "hjb_psi", "continuity"})
          CHECK(row[k].get<double>() <= 1e-10);
  }
}

TEST_CASE("reports are deterministic, embed the config, and CSVs carry headers") {
  ScenarioConfig cfg = load_scenario(kScenarios + "/graph.json");
  cfg.outputs = temp_dir("graph_a");
  const ScenarioResult a = run_scenario(cfg);
  cfg.outputs = temp_dir("graph_b");
  const ScenarioResult b = run_scenario(cfg);
  CHECK(a.passed);
  CHECK(a.report == b.report);
  CHECK(a.report["config"] == cfg.raw);
  REQUIRE(a.files.size() == b.files.size());
  for (std::size_t k = 0; k < a.files.size(); ++k) {
    CHECK(read_file(a.files[k]) == read_file(b.files[k]));
    if (fs::path(a.files[k]).extension() == ".csv") {
      const std::string text = read_file(a.files[k]);
      CHECK(text.substr(0, text.find('\n')).find_first_of("0123456789") != 0);
    }
  }
}

TEST_CASE("ENTBRIDGE_OUT overrides the configured output directory") {
  const std::string dir = temp_dir("env_out");
  ::setenv("ENTBRIDGE_OUT", dir.c_str(), 1);
  ScenarioConfig cfg = load_scenario(kScenarios + "/circle.json");
  cfg.outputs = "/should/not/be/used";
  const ScenarioResult res = run_scenario(cfg, {"kernel"});
  ::unsetenv("ENTBRIDGE_OUT");
  CHECK(res.out_dir == dir);
  CHECK(fs::exists(dir + "/circle_report.json"));
  CHECK(fs::exists(dir + "/circle_kernel.csv"));
}

TEST_CASE("module failures are tagged with the module name") {
  json j = read_scenario_json("bumps64.json");
  j["epsilons"] = {0.5e-4};
  const ScenarioConfig cfg = parse_scenario(j);
  try {
    run_check(cfg, "bridge");
    FAIL("expected ModuleError");
  } catch (const ModuleError& e) {
    CHECK(e.module() == "schrodinger_solver");
  }
  json k = read_scenario_json("estimates.json");
  CHECK_THROWS_AS(run_check(parse_scenario(k), "bridge"), ConfigError);
}

TEST_CASE("shipped gauss1d scenario regenerates the frozen CSVs byte for byte") {
  ScenarioConfig cfg = load_scenario(kScenarios + "/gauss1d.json");
  cfg.outputs = temp_dir("gauss1d");
  const ScenarioResult res = run_scenario(cfg);
  CHECK(res.passed);
  int compared = 0;
  for (const std::string& f : res.files) {
    if (fs::path(f).extension() != ".csv") continue;
    const std::string golden = std::string(ENTBRIDGE_GOLDEN_DIR) + "/" + fs::path(f).filename().string();
    REQUIRE_MESSAGE(fs::exists(golden), "missing golden " << golden);
    CHECK_MESSAGE(read_file(f) == read_file(golden), "differs from golden: " << golden);
    ++compared;
  }
  CHECK(compared == 5);
}

TEST_CASE("oracle, ot and hopflax checks pass on their shipped scenarios") {
  const ScenarioConfig oracle = load_scenario(kScenarios + "/oracle5.json");
  CHECK(run_check(oracle, "oracle").passed);
  const ScenarioConfig bumps = load_scenario(kScenarios + "/bumps64.json");
  const CheckOutcome ot = run_check(bumps, "ot");
  CHECK(ot.passed);
  CHECK(std::abs(ot.data["lp_cost"].get<double>() - ot.data["quantile_cost"].get<double>()) < 1e-9);
  CHECK(run_check(bumps, "hopflax").passed);
}

TEST_CASE("acceptance tolerances round-trip and reject unknown keys") {
  AcceptanceTolerances t;
  t.metric_grid_factor = 0.02;
  const AcceptanceTolerances u = AcceptanceTolerances::from_json(t.to_json());
  CHECK(u.metric_grid_factor == 0.02);
  CHECK(u.schrodinger_max_iter == t.schrodinger_max_iter);
  CHECK_THROWS(AcceptanceTolerances::from_json({{"no_such_threshold", 1.0}}));
}

TEST_CASE("CSV formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(std::nan("")) == "nan");
  CsvTable t{{"a", "b"}, {}};
  t.add_row({1.5, long(3)});
  CHECK(to_csv(t) == "a,b\n1.5,3\n");
  CHECK_THROWS(t.add_row({1.0}));
}
