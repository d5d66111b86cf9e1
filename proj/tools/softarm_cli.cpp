#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "softarm/runner.hpp"

namespace fs = std::filesystem;
using namespace softarm;

namespace {

int run_one(Scenario scenario, const fs::path& out_dir, bool quiet) {
  fs::create_directories(out_dir);
  const RunResult res = run_scenario(scenario);
  export_csv(res.log, (out_dir / "log.csv").string(), scenario.log_timing);
  write_metrics_json(res.metrics, (out_dir / "metrics.json").string());
  if (!quiet) {
    std::cout << scenario.name << ": steps=" << res.metrics.steps
              << " rmse=" << res.metrics.rmse_steady << " max_err=" << res.metrics.max_error
              << " mean_solve_ms=" << res.metrics.mean_solve_ms
              << " deadline_misses=" << res.metrics.deadline_misses
              << " violations=" << res.metrics.constraint_violations;
    if (std::isfinite(res.metrics.min_clearance))
      std::cout << " min_clearance=" << res.metrics.min_clearance;
    std::cout << (res.aborted ? " [ABORTED: " + res.abort_reason + "]" : "") << "\n";
  }
  return res.aborted ? 3 : 0;
}

std::string sanitize(std::string s) {
  for (auto& c : s)
    if (c == '/' || c == ' ') c = '_';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-space tube MPC laboratory for a pneumatic soft arm"};
  app.require_subcommand(1);

  // run
  std::string scenario_path, out_dir = "out", controller_override;
  std::vector<std::string> overrides;
  std::uint64_t seed_override = 0;
  bool seed_given = false, quiet = false;
  double rate_override = 0.0;
  auto* run = app.add_subcommand("run", "Run a scenario file and write log.csv + metrics.json");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed_override, "override the scenario seed")
      ->each([&](const std::string&) { seed_given = true; });
  run->add_option("--rate", rate_override, "override the control rate [Hz]");
  run->add_option("--controller", controller_override,
                  "override the controller (robust_mpc|penalized_mpc|soft_mpc|quasi_static)");
  run->add_option("--set", overrides, "dotted-path config overrides, key=value");
  run->add_flag("--quiet", quiet, "suppress the summary line");

  // validate
  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Schema-check a scenario or finder file");
  validate->add_option("file", validate_path, "JSON file")->required();

  // find-box
  std::string finder_path, box_out = "box.json";
  auto* findbox = app.add_subcommand("find-box", "Offline search for a curvature constraint box");
  findbox->add_option("finder", finder_path, "finder JSON file")->required();
  findbox->add_option("--out", box_out, "output box file");

  // sweep
  std::string sweep_path, sweep_param, sweep_values, sweep_out = "sweep";
  auto* sweep = app.add_subcommand("sweep", "Batch runs over one config parameter");
  sweep->add_option("scenario", sweep_path, "scenario JSON file")->required();
  sweep->add_option("--param", sweep_param, "dotted config path, e.g. controller.weights.q")
      ->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")->required();
  sweep->add_option("--out", sweep_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (!controller_override.empty()) overrides.push_back("controller.type=" + controller_override);
      if (rate_override > 0.0) overrides.push_back("run.rate_hz=" + std::to_string(rate_override));
      if (seed_given) overrides.push_back("run.seed=" + std::to_string(seed_override));
      const Scenario s = load_scenario_with_overrides(scenario_path, overrides);
      return run_one(s, out_dir, quiet);
    }
    if (*validate) {
      const std::string kind = validate_config_file(validate_path);
      std::cout << validate_path << ": OK (" << kind << ")\n";
      return 0;
    }
    if (*findbox) {
      const FinderFile f = load_finder_file(finder_path);
      const FinderResult res = find_constraint_set(f.finder, f.geometry);
      write_box_file(res.box, res.standard, box_out);
      std::cout << "box written to " << box_out << (res.standard ? " (standard limits)" : "")
                << ", accepted " << res.accepted.size() << " improvements\n";
      return 0;
    }
    if (*sweep) {
      std::vector<std::string> values;
      std::stringstream ss(sweep_values);
      std::string v;
      while (std::getline(ss, v, ',')) values.push_back(v);
      if (values.empty()) throw ConfigError("sweep: --values is empty");
      int rc = 0;
      for (const auto& value : values) {
        const Scenario s =
            load_scenario_with_overrides(sweep_path, {sweep_param + "=" + value});
        const fs::path dir = fs::path(sweep_out) / sanitize(sweep_param + "=" + value);
        rc = std::max(rc, run_one(s, dir, quiet));
      }
      return rc;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NoFeasibleBox& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
