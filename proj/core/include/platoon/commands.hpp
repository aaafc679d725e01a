#pragma once

#include "platoon/controller.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace platoon {

/// Process exit codes shared by all subcommands, for scriptable triage.
enum ExitCode {
  kExitOk = 0,
  kExitConfig = 2,
  kExitCollision = 3,
  kExitDivergence = 4,
  kExitCertification = 5,
};

/// Environment variable naming the default output root (used when --out is
/// omitted); falls back to ./platoonsim-out.
inline constexpr const char* kOutRootEnv = "PLATOONSIM_OUT";

struct CommandOptions {
  std::string scenario_path;
  std::optional<std::filesystem::path> out_dir;
  std::optional<ControlVariant> variant;  // overrides the scenario's variant
  std::optional<int> stride;              // overrides the recording stride
  std::vector<int> n_list;                // sweep only
  int workers = 1;                        // sweep only
  bool compare_variants = false;          // sweep only
};

/// Simulate and write trajectory.csv, summary.json, scenario_resolved.ini.
int cmd_run(const CommandOptions& options);

/// Simulate, then run the full check suite; writes certification_report.json
/// next to the run outputs and prints one verdict line per check.
int cmd_certify(const CommandOptions& options);

/// One run per requested string length (plus the baseline variant when
/// asked), per-run outputs in subdirectories, comparison.csv and
/// sweep_summary.json at the output root.
int cmd_sweep(const CommandOptions& options);

}  // namespace platoon
