#pragma once

#include "platoon/analysis.hpp"
#include "platoon/simulator.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace platoon {

/// Long-format trajectory table, one row per (frame, agent):
///   t,k,y,v,u,z,zv,L_k
/// For dim > 1 the vector columns expand with axis suffixes (y0, y1, ...).
/// The pairwise columns are empty for the leader row (k = 0). Bytes are
/// deterministic: shortest round-trip number formatting, no timestamps.
void write_trajectory_csv(const TrajectoryLog& log, std::ostream& out);
std::string trajectory_csv(const TrajectoryLog& log);

/// Run summary document (status, min gap, final errors, wall time).
std::string summary_json(const TrajectoryLog& log, const Scenario& scenario,
                         double wall_seconds);

std::string certification_report_json(const CertificationReport& report);

/// Per-position metric table for a sweep, one row per (variant, n, k).
std::string sweep_comparison_csv(const SweepResult& result);

std::string sweep_summary_json(const SweepResult& result);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace platoon
