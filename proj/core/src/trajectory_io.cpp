#include "platoon/trajectory_io.hpp"

#include "platoon/format.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace platoon {

namespace {

using json = nlohmann::ordered_json;

void append_vector_header(std::ostream& out, const char* stem, int dim) {
  if (dim == 1) {
    out << ',' << stem;
  } else {
    for (int a = 0; a < dim; ++a) out << ',' << stem << a;
  }
}

void append_segment(std::ostream& out, const Vec& data, int offset, int dim) {
  for (int a = 0; a < dim; ++a) out << ',' << format_double(data[offset + a]);
}

void append_empty(std::ostream& out, int dim) {
  for (int a = 0; a < dim; ++a) out << ',';
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const char* variant_name(ControlVariant v) {
  return v == ControlVariant::Feedforward ? "feedforward" : "local-only";
}

}  // namespace

void write_trajectory_csv(const TrajectoryLog& log, std::ostream& out) {
  const int d = log.dim;
  out << "t,k";
  append_vector_header(out, "y", d);
  append_vector_header(out, "v", d);
  append_vector_header(out, "u", d);
  append_vector_header(out, "z", d);
  append_vector_header(out, "zv", d);
  out << ",L_k\n";
  for (const Frame& f : log.frames) {
    const std::string t = format_double(f.t);
    for (int k = 0; k <= log.n; ++k) {
      out << t << ',' << k;
      append_segment(out, f.y, k * d, d);
      append_segment(out, f.v, k * d, d);
      append_segment(out, f.u, k * d, d);
      if (k == 0) {
        append_empty(out, d);
        append_empty(out, d);
        out << ",\n";
      } else {
        append_segment(out, f.z, (k - 1) * d, d);
        append_segment(out, f.zv, (k - 1) * d, d);
        out << ',' << format_double(f.L[k - 1]) << '\n';
      }
    }
  }
}

std::string trajectory_csv(const TrajectoryLog& log) {
  std::ostringstream out;
  write_trajectory_csv(log, out);
  return out.str();
}

std::string summary_json(const TrajectoryLog& log, const Scenario& scenario,
                         double wall_seconds) {
  json doc;
  doc["status"] = to_string(log.status);
  doc["fault_agent"] = log.fault_agent;
  doc["n"] = log.n;
  doc["dim"] = log.dim;
  doc["T"] = scenario.T;
  doc["dt"] = log.dt;
  doc["stride"] = log.stride;
  doc["variant"] = variant_name(scenario.controllers.empty()
                                    ? ControlVariant::Feedforward
                                    : scenario.controllers.front().variant());
  doc["scenario_hash"] = hash_hex(log.scenario_hash);
  doc["total_steps"] = log.total_steps;
  doc["frames"] = log.frames.size();
  doc["min_gap"] = log.min_gap;
  if (!log.frames.empty()) {
    const Frame& last = log.frames.back();
    const int d = log.dim;
    doc["final_t"] = last.t;
    double max_zv = 0.0;
    json gaps = json::array();
    for (int k = 1; k <= log.n; ++k) {
      max_zv = std::max(max_zv, last.zv.segment((k - 1) * d, d).norm());
      gaps.push_back(last.z.segment((k - 1) * d, d).norm());
    }
    doc["final_max_zv"] = max_zv;
    doc["final_gaps"] = std::move(gaps);
  }
  doc["wall_time_s"] = wall_seconds;
  return doc.dump(2) + "\n";
}

std::string certification_report_json(const CertificationReport& report) {
  json doc;
  doc["scenario_hash"] = hash_hex(report.scenario_hash);
  doc["all_pass"] = report.all_pass;
  json checks = json::array();
  for (const CheckEntry& entry : report.checks) {
    json e;
    e["name"] = entry.name;
    e["verdict"] = entry.verdict;
    e["worst_residual"] = entry.worst_residual;
    e["at_t"] = entry.at_t;
    e["at_k"] = entry.at_k;
    e["note"] = entry.note;
    checks.push_back(std::move(e));
  }
  doc["checks"] = std::move(checks);
  return doc.dump(2) + "\n";
}

std::string sweep_comparison_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "variant,n,k,L0,max_L,max_zv,settle_time,invariance_pass\n";
  for (const SweepRow& row : result.rows) {
    for (std::size_t k = 0; k < row.max_L.size(); ++k) {
      out << variant_name(row.variant) << ',' << row.n << ',' << (k + 1) << ','
          << format_double(row.L0[k]) << ',' << format_double(row.max_L[k]) << ','
          << format_double(row.max_zv[k]) << ',' << format_double(row.settle_time[k]) << ','
          << (row.invariance_pass ? "true" : "false") << '\n';
    }
  }
  return out.str();
}

std::string sweep_summary_json(const SweepResult& result) {
  json doc;
  doc["all_completed"] = result.all_completed;
  doc["invariance_all"] = result.invariance_all;
  doc["prefix_pass"] = result.prefix_pass;
  json prefix = json::array();
  for (const PrefixCheck& check : result.prefix) {
    json e;
    e["variant"] = variant_name(check.variant);
    e["n"] = check.n;
    e["max_abs_diff"] = check.max_abs_diff;
    e["pass"] = check.pass;
    prefix.push_back(std::move(e));
  }
  doc["prefix"] = std::move(prefix);
  json runs = json::array();
  for (const SweepRow& row : result.rows) {
    json e;
    e["variant"] = variant_name(row.variant);
    e["n"] = row.n;
    e["status"] = to_string(row.status);
    e["invariance_pass"] = row.invariance_pass;
    runs.push_back(std::move(e));
  }
  doc["runs"] = std::move(runs);
  return doc.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  out << content;
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

}  // namespace platoon
