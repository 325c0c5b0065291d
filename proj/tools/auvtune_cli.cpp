// auvtune: depth-plant simulation and fuzzy PID tuning from the command line.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "auvtune/auvtune.hpp"

int main(int argc, char** argv) {
  using namespace auvtune;

  CLI::App app{"Depth-channel PID / fuzzy PID simulation and PSO tuning"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool dump_config = false;
  app.add_option("--config", config_path, "Key-value run configuration");
  app.add_option("--seed", seed, "PSO seed (overrides pso.seed)");
  app.add_option("--out", out_dir, "Output directory (overrides output.dir)");
  app.add_flag("--dump-config", dump_config, "Print the effective configuration and exit");

  auto* plant = app.add_subcommand("plant", "Plant inspection");
  plant->require_subcommand(1);
  auto* plant_show = plant->add_subcommand("show", "Print plant coefficients as JSON");

  std::string mode_name = "fuzzy";
  std::string theta_path;
  auto* simulate = app.add_subcommand("simulate", "Run one closed loop and write its trace and metrics");
  simulate->add_option("--mode", mode_name, "Controller: pid or fuzzy")->check(CLI::IsMember({"pid", "fuzzy"}));
  simulate->add_option("--theta", theta_path, "Tuning vector JSON (defaults to [controller] gains)");

  auto* tune = app.add_subcommand("tune", "PSO-tune the six fuzzy PID parameters");

  std::string compare_theta;
  auto* compare = app.add_subcommand("compare", "Traditional PID vs fuzzy PID vs tuned fuzzy PID");
  compare->add_option("--theta", compare_theta, "Tuned vector JSON; tunes inline when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  RunSpec spec;
  std::optional<TuningVector> theta;
  try {
    if (!config_path.empty()) spec = load_run_spec(config_path);
    if (seed) spec.pso.seed = *seed;
    if (out_dir) spec.output_dir = *out_dir;
    spec.validate();
    const std::string& tp = simulate->parsed() ? theta_path : compare_theta;
    if (!tp.empty()) theta = load_theta(tp);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (dump_config) {
    std::cout << dump_run_spec(spec);
    return kExitOk;
  }

  if (plant_show->parsed()) return cmd_plant_show(spec, std::cout, std::cerr);
  if (simulate->parsed()) {
    const auto mode = mode_name == "pid" ? ControllerMode::Pid : ControllerMode::FuzzyPid;
    return cmd_simulate(spec, mode, theta, std::cout, std::cerr);
  }
  if (tune->parsed()) return cmd_tune(spec, std::cout, std::cerr);
  if (compare->parsed()) return cmd_compare(spec, theta, std::cout, std::cerr);

  std::cout << app.help();
  return kExitOk;
}
