// kp-rankone <command> <scenario.json> [--out DIR] [--seed N] [--trials N] [--tol X]
//            [--t1 a:b:n] [--t2 a:b:n] [--t3 a:b:n] [--z a:b:n] [--K N]

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "kp_rankone/commands.hpp"

namespace {

int run(int argc, char** argv) {
  using namespace kp_rankone;
  CLI::App app{"Rank-one KP tau-functions: evaluation grids and identity checks"};
  app.set_version_flag("--version", "kp-rankone 1.0.0");

  std::string command;
  std::string scenario_path;
  std::string out_dir = ".";
  std::string t1, t2, t3, z;
  CommandFlags flags;
  std::uint64_t seed = 0;
  int trials = 0;
  double tol = 0.0;
  int truncation = 0;

  std::string commands;
  for (const auto& name : command_names()) commands += (commands.empty() ? "" : ", ") + name;
  app.add_option("command", command, "One of: " + commands)->required();
  app.add_option("scenario", scenario_path, "Scenario JSON file")->required();
  app.add_option("--out", out_dir, "Output directory (created if missing)");
  auto* seed_opt = app.add_option("--seed", seed, "Random seed for trials");
  auto* trials_opt = app.add_option("--trials", trials, "Number of randomized trials");
  auto* tol_opt = app.add_option("--tol", tol, "Residual tolerance (overrides scenario and KP_RANKONE_TOL)");
  app.add_option("--t1", t1, "t1 grid start:end:count");
  app.add_option("--t2", t2, "t2 grid start:end:count");
  app.add_option("--t3", t3, "t3 grid start:end:count");
  app.add_option("--z", z, "spectral parameter grid start:end:count");
  auto* k_opt = app.add_option("--K", truncation, "Time truncation order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (seed_opt->count() > 0) flags.seed = seed;
    if (trials_opt->count() > 0) flags.trials = trials;
    if (tol_opt->count() > 0) flags.tolerance = tol;
    if (k_opt->count() > 0) flags.truncation = truncation;
    if (!t1.empty()) flags.t1 = parse_grid_spec(t1);
    if (!t2.empty()) flags.t2 = parse_grid_spec(t2);
    if (!t3.empty()) flags.t3 = parse_grid_spec(t3);
    if (!z.empty()) flags.z = parse_grid_spec(z);
  } catch (const Error& e) {
    std::cerr << "kp-rankone: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    bool known = false;
    for (const auto& name : command_names()) known = known || name == command;
    if (!known) throw UsageError("unknown command \"" + command + "\" (expected one of: " + commands + ")");
    const Scenario scenario = parse_scenario_text(read_text_file(scenario_path));
    const CommandResult result = run_command(command, scenario, flags);
    write_outputs(result, out_dir);
    for (const auto& f : result.files) std::cout << (std::filesystem::path(out_dir) / f.name).string() << "\n";
    return result.exit_code;
  } catch (const UsageError& e) {
    std::cerr << "kp-rankone: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "kp-rankone: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "kp-rankone: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
