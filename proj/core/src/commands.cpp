#include "platoon/commands.hpp"

#include "platoon/analysis.hpp"
#include "platoon/scenario_io.hpp"
#include "platoon/simulator.hpp"
#include "platoon/trajectory_io.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>

namespace platoon {

namespace {

namespace fs = std::filesystem;

fs::path resolve_out_dir(const CommandOptions& options, const char* command) {
  if (options.out_dir) return *options.out_dir;
  const char* root = std::getenv(kOutRootEnv);
  const fs::path base = root != nullptr && *root != '\0' ? fs::path(root)
                                                         : fs::path("platoonsim-out");
  return base / (fs::path(options.scenario_path).stem().string() + "-" + command);
}

void apply_overrides(Scenario& sc, const CommandOptions& options) {
  if (options.stride) sc.stride = *options.stride;
  if (options.variant && !sc.controllers.empty() &&
      sc.controllers.front().variant() != *options.variant) {
    std::vector<ControllerConfig> rebuilt;
    rebuilt.reserve(sc.controllers.size());
    for (const auto& cfg : sc.controllers) {
      rebuilt.emplace_back(cfg.beta(), cfg.apf(), cfg.sigma(), *options.variant);
    }
    sc.controllers = std::move(rebuilt);
  }
}

int status_exit(RunStatus status) {
  switch (status) {
    case RunStatus::Completed: return kExitOk;
    case RunStatus::Collision: return kExitCollision;
    case RunStatus::Diverged: return kExitDivergence;
  }
  return kExitDivergence;
}

struct LoadedScenario {
  Scenario scenario;
  fs::path out_dir;
};

// Load + validate before touching the filesystem: config errors produce no
// output files.
std::optional<LoadedScenario> prepare(const CommandOptions& options, const char* command) {
  try {
    LoadedScenario loaded{load_scenario(options.scenario_path), resolve_out_dir(options, command)};
    apply_overrides(loaded.scenario, options);
    loaded.scenario.validate();
    return loaded;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return std::nullopt;
  }
}

struct TimedRun {
  TrajectoryLog log;
  double wall_seconds = 0.0;
};

TimedRun timed_run(const Scenario& scenario) {
  const auto start = std::chrono::steady_clock::now();
  TimedRun result;
  result.log = run(scenario);
  result.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_run_outputs(const fs::path& dir, const Scenario& scenario, const TrajectoryLog& log,
                       double wall_seconds) {
  fs::create_directories(dir);
  write_text_file(dir / "trajectory.csv", trajectory_csv(log));
  write_text_file(dir / "summary.json", summary_json(log, scenario, wall_seconds));
  write_text_file(dir / "scenario_resolved.ini", serialize_scenario(scenario));
}

void print_run_line(const TrajectoryLog& log, const fs::path& dir) {
  std::cout << "status: " << to_string(log.status);
  if (log.fault_agent >= 0) std::cout << " (agent " << log.fault_agent << ")";
  std::cout << "  min_gap: " << log.min_gap << "  frames: " << log.frames.size() << "  -> "
            << dir.string() << "\n";
}

}  // namespace

int cmd_run(const CommandOptions& options) {
  const auto loaded = prepare(options, "run");
  if (!loaded) return kExitConfig;
  const TimedRun result = timed_run(loaded->scenario);
  write_run_outputs(loaded->out_dir, loaded->scenario, result.log, result.wall_seconds);
  print_run_line(result.log, loaded->out_dir);
  return status_exit(result.log.status);
}

int cmd_certify(const CommandOptions& options) {
  const auto loaded = prepare(options, "certify");
  if (!loaded) return kExitConfig;
  const TimedRun result = timed_run(loaded->scenario);
  write_run_outputs(loaded->out_dir, loaded->scenario, result.log, result.wall_seconds);
  if (result.log.status != RunStatus::Completed) {
    print_run_line(result.log, loaded->out_dir);
    return status_exit(result.log.status);
  }
  const CertificationReport report = certify_run(result.log, loaded->scenario);
  write_text_file(loaded->out_dir / "certification_report.json",
                  certification_report_json(report));
  for (const CheckEntry& entry : report.checks) {
    const char* tag = entry.verdict == "pass" ? "PASS" : entry.verdict == "fail" ? "FAIL" : "N/A ";
    std::cout << tag << "  " << entry.name;
    if (entry.verdict != "not-applicable") {
      std::cout << "  (worst " << entry.worst_residual;
      if (entry.at_k >= 0) std::cout << " at k=" << entry.at_k << ", t=" << entry.at_t;
      std::cout << ")";
    } else if (!entry.note.empty()) {
      std::cout << "  [" << entry.note << "]";
    }
    std::cout << "\n";
  }
  print_run_line(result.log, loaded->out_dir);
  return report.all_pass ? kExitOk : kExitCertification;
}

int cmd_sweep(const CommandOptions& options) {
  if (options.n_list.empty()) {
    std::cerr << "config error: sweep needs a nonempty --n-list\n";
    return kExitConfig;
  }
  const auto loaded = prepare(options, "sweep");
  if (!loaded) return kExitConfig;
  const fs::path out_dir = loaded->out_dir;
  fs::create_directories(out_dir);

  SweepResult result;
  try {
    result = scalability_study(
        loaded->scenario, options.n_list, options.compare_variants, options.workers,
        [&out_dir](const SweepRun& run_info) {
          const std::string name =
              std::string(run_info.variant == ControlVariant::Feedforward ? "feedforward"
                                                                          : "local-only") +
              "-n" + std::to_string(run_info.n);
          write_run_outputs(out_dir / name, run_info.scenario, run_info.log,
                            run_info.wall_seconds);
        });
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  write_text_file(out_dir / "comparison.csv", sweep_comparison_csv(result));
  write_text_file(out_dir / "sweep_summary.json", sweep_summary_json(result));

  for (const SweepRow& row : result.rows) {
    std::cout << (row.variant == ControlVariant::Feedforward ? "feedforward" : "local-only")
              << " n=" << row.n << ": " << to_string(row.status)
              << (row.invariance_pass ? ", invariance ok" : ", invariance VIOLATED") << "\n";
  }
  for (const PrefixCheck& check : result.prefix) {
    std::cout << "prefix n=" << check.n << " vs smallest: max |diff| = " << check.max_abs_diff
              << (check.pass ? " (ok)" : " (MISMATCH)") << "\n";
  }
  std::cout << "-> " << out_dir.string() << "\n";

  if (!result.all_completed) {
    for (const SweepRow& row : result.rows) {
      if (row.status != RunStatus::Completed) return status_exit(row.status);
    }
  }
  return result.invariance_all ? kExitOk : kExitCertification;
}

}  // namespace platoon
