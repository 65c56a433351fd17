#include "entbridge/acceptance.hpp"
#include "entbridge/scenario.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

using namespace entbridge;

namespace {

// Checks each subcommand may run; the first one is the default.
const std::map<std::string, std::vector<std::string>> kFamilies{
    {"bridge", {"bridge", "kernel", "oracle"}},
    {"path", {"path", "refinement"}},
    {"entropy", {"entropy"}},
    {"ot", {"ot"}},
    {"hopflax", {"hopflax"}},
    {"estimates", {"estimates", "second_order"}},
    {"sweep", {"sweep"}}};

int run_family(const std::string& family, const std::string& config_path, const std::string& out) {
  ScenarioConfig cfg = load_scenario(config_path);
  if (!out.empty()) cfg.outputs = out;
  const auto& allowed = kFamilies.at(family);
  std::vector<std::string> checks;
  for (const auto& c : cfg.checks)
    if (std::find(allowed.begin(), allowed.end(), c) != allowed.end()) checks.push_back(c);
  if (checks.empty()) checks.push_back(allowed.front());

  const ScenarioResult res = run_scenario(cfg, checks);
  for (const auto& c : res.report["checks"])
    std::cout << (c["passed"].get<bool>() ? "PASS  " : "FAIL  ") << cfg.name << "/"
              << c["check"].get<std::string>() << "\n";
  for (const auto& f : res.files) std::cout << "wrote " << f << "\n";
  return res.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schrodinger bridges, entropic interpolation and optimal transport on finite spaces"};
  app.require_subcommand(1);

  std::string config_path, out;
  for (const auto& [name, checks] : kFamilies) {
    auto* sub = app.add_subcommand(name, "run the " + name + " checks of a scenario file");
    sub->add_option("config", config_path, "scenario JSON file")->required();
    sub->add_option("-o,--out", out, "output directory (ENTBRIDGE_OUT takes precedence)");
  }

  std::string scenario_dir, tolerance_path;
  std::vector<int> only;
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_option("--scenarios", scenario_dir, "directory holding the shipped scenario files");
  verify->add_option("--tolerances", tolerance_path, "JSON file overriding acceptance thresholds");
  verify->add_option("--only", only, "criterion ids to run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) {
      AcceptanceOptions opt;
      opt.scenario_dir = scenario_dir;
      opt.only = only;
      if (!tolerance_path.empty()) {
        std::ifstream in(tolerance_path);
        if (!in) throw ScenarioFileNotFound(tolerance_path);
        try {
          opt.tolerances = AcceptanceTolerances::from_json(nlohmann::json::parse(in));
        } catch (const std::exception& e) {
          throw ConfigError("tolerances", e.what());
        }
      }
      return verify_all(opt, std::cout);
    }
    for (auto* sub : app.get_subcommands()) return run_family(sub->get_name(), config_path, out);
  } catch (const ScenarioFileNotFound& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ModuleError& e) {
    std::cerr << "error in " << e.module() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
