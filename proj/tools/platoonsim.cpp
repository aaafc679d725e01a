// Command-line front end: scenario in, trajectory/certification/sweep
// artifacts out. See README.md for the scenario format and exit codes.

#include "platoon/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

void add_common(CLI::App* cmd, platoon::CommandOptions& options, std::string& variant,
                int& stride) {
  cmd->add_option("--scenario", options.scenario_path, "Scenario file (INI sections)")
      ->required();
  cmd->add_option("--out", options.out_dir,
                  "Output directory (default: $PLATOONSIM_OUT/<scenario>-<command>)");
  cmd->add_option("--variant", variant, "Override the controller variant")
      ->check(CLI::IsMember({"feedforward", "local-only"}));
  cmd->add_option("--stride", stride, "Override the recording stride")->check(CLI::PositiveNumber);
}

void finish_common(platoon::CommandOptions& options, const std::string& variant, int stride) {
  if (variant == "feedforward") options.variant = platoon::ControlVariant::Feedforward;
  if (variant == "local-only") options.variant = platoon::ControlVariant::LocalOnly;
  if (stride > 0) options.stride = stride;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic string-platoon simulator with built-in certification"};
  app.require_subcommand(1);

  platoon::CommandOptions options;
  std::string variant;
  int stride = 0;

  CLI::App* run = app.add_subcommand("run", "Simulate one scenario");
  add_common(run, options, variant, stride);

  CLI::App* certify = app.add_subcommand("certify", "Simulate, then run the check suite");
  add_common(certify, options, variant, stride);

  CLI::App* sweep = app.add_subcommand("sweep", "Rerun across string lengths");
  add_common(sweep, options, variant, stride);
  sweep->add_option("--n-list", options.n_list, "String lengths, e.g. 5,25,100")
      ->required()
      ->delimiter(',');
  sweep->add_option("--workers", options.workers, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep->add_flag("--compare-variants", options.compare_variants,
                  "Also run the local-only baseline at every n");

  CLI11_PARSE(app, argc, argv);
  finish_common(options, variant, stride);

  try {
    if (run->parsed()) return platoon::cmd_run(options);
    if (certify->parsed()) return platoon::cmd_certify(options);
    return platoon::cmd_sweep(options);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return platoon::kExitConfig;
  }
}
