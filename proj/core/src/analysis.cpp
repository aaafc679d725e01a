#include "platoon/analysis.hpp"

#include "platoon/sigma.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

namespace platoon {

namespace {

bool uniform_spacing(const TrajectoryLog& log, double* dt_out) {
  if (log.frames.size() < 2) return false;
  const double dt0 = log.frames[1].t - log.frames[0].t;
  for (std::size_t i = 1; i + 1 < log.frames.size(); ++i) {
    const double dt = log.frames[i + 1].t - log.frames[i].t;
    if (std::abs(dt - dt0) > 1e-9 * std::max(1.0, dt0)) return false;
  }
  *dt_out = dt0;
  return true;
}

bool certifiable(const Scenario& sc) {
  if (!sc.feedforward()) return false;
  const double alpha = alpha_bound(sc.model);
  for (const auto& cfg : sc.controllers) {
    if (!(cfg.beta() > alpha)) return false;
  }
  return true;
}

void require_fd_ready(const TrajectoryLog& log, const char* who) {
  if (log.status != RunStatus::Completed) {
    throw std::invalid_argument(std::string(who) + ": needs a Completed log");
  }
  if (log.stride != 1) {
    throw std::invalid_argument(std::string(who) + ": needs stride-1 recording");
  }
  if (log.frames.size() < 3) {
    throw std::invalid_argument(std::string(who) + ": log too short (< 3 frames)");
  }
}

double agent_rate_rhs(const Frame& f, const Scenario& sc, int k) {
  const int d = sc.dim;
  return lyap_rate_rhs(f.zv.segment((k - 1) * d, d), f.v.segment((k - 1) * d, d),
                       f.v.segment(k * d, d), sc.controllers[k - 1].beta(), sc.model);
}

}  // namespace

double lyap_local(const Eigen::Ref<const Vec>& z, const Eigen::Ref<const Vec>& z_v,
                  const ApfParams& apf, const SigmaParam& sp) {
  const double q = z.squaredNorm();
  if (q == 0.0) {
    throw CollisionError("lyap_local: zero gap", -1);
  }
  if (!z_v.allFinite()) {
    throw std::invalid_argument("lyap_local: non-finite relative velocity");
  }
  return apf_value(sigma_norm_from_squared(q, sp), apf) + 0.5 * z_v.squaredNorm();
}

double lyap_rate_rhs(const Eigen::Ref<const Vec>& z_v, const Eigen::Ref<const Vec>& v_prev,
                     const Eigen::Ref<const Vec>& v_k, double beta, const VehicleModel& m) {
  return z_v.dot(model_f(m, v_prev) - model_f(m, v_k)) - beta * z_v.squaredNorm();
}

Lemma1Result check_lemma1(const TrajectoryLog& log, const Scenario& scenario,
                          double rate_constant) {
  require_fd_ready(log, "check_lemma1");
  Lemma1Result result;
  if (!scenario.feedforward()) {
    result.note = "local-only baseline: the rate identity assumes the feedforward law";
    return result;
  }
  double dt = 0.0;
  if (!uniform_spacing(log, &dt)) {
    result.note = "non-uniform frame spacing (guard substeps); identity check skipped";
    return result;
  }
  result.applicable = true;
  result.threshold = rate_constant * dt * dt;
  result.max_residual.assign(scenario.n, 0.0);
  for (std::size_t i = 1; i + 1 < log.frames.size(); ++i) {
    const Frame& prev = log.frames[i - 1];
    const Frame& mid = log.frames[i];
    const Frame& next = log.frames[i + 1];
    const double two_dt = next.t - prev.t;
    for (int k = 1; k <= scenario.n; ++k) {
      const double fd = (next.L[k - 1] - prev.L[k - 1]) / two_dt;
      const double residual = std::abs(fd - agent_rate_rhs(mid, scenario, k));
      if (residual > result.max_residual[k - 1]) {
        result.max_residual[k - 1] = residual;
      }
      if (residual > result.worst_residual) {
        result.worst_residual = residual;
        result.worst_t = mid.t;
        result.worst_agent = k;
      }
    }
  }
  result.pass = result.worst_residual <= result.threshold;
  return result;
}

Theorem1Result check_theorem1(const TrajectoryLog& log, const Scenario& scenario) {
  Theorem1Result result;
  if (log.status != RunStatus::Completed) {
    throw std::invalid_argument("check_theorem1: needs a Completed log");
  }
  if (log.frames.empty()) {
    throw std::invalid_argument("check_theorem1: empty log");
  }
  if (!certifiable(scenario)) {
    result.note = scenario.feedforward()
                      ? "gain does not dominate the model's one-sided Lipschitz bound"
                      : "local-only baseline: no invariance claim is made";
    return result;
  }
  result.applicable = true;
  const int d = scenario.dim;
  const double tol_inv = scenario.certify.tol_inv;
  result.invariance_pass = true;
  result.gap_pass = true;
  result.worst_gap_margin = std::numeric_limits<double>::infinity();
  result.agents.resize(scenario.n);
  for (int k = 1; k <= scenario.n; ++k) {
    AgentInvariance& agent = result.agents[k - 1];
    agent.L0 = log.frames.front().L[k - 1];
    agent.max_L = 0.0;
    agent.min_gap = std::numeric_limits<double>::infinity();
    for (const Frame& f : log.frames) {
      agent.max_L = std::max(agent.max_L, f.L[k - 1]);
      agent.min_gap = std::min(agent.min_gap, f.z.segment((k - 1) * d, d).norm());
    }
    agent.final_zv = log.frames.back().zv.segment((k - 1) * d, d).norm();

    agent.invariance_ok = agent.max_L <= agent.L0 * (1.0 + tol_inv) + kInvarianceFloor;
    result.worst_invariance_excess =
        std::max(result.worst_invariance_excess, agent.max_L - agent.L0);

    const double c = 2.0 * agent.L0;
    const ControllerConfig& cfg = scenario.controllers[k - 1];
    if (c > 0.0) {
      try {
        agent.eta = eta_c(c, cfg.apf(), cfg.sigma());
      } catch (const std::invalid_argument&) {
        agent.eta = 0.0;  // level above the bracket edge: no usable floor
      }
    } else {
      agent.eta = 0.0;  // started exactly at the minimum; any positive gap qualifies
    }
    agent.gap_ok = agent.min_gap > agent.eta;
    result.worst_gap_margin = std::min(result.worst_gap_margin, agent.min_gap - agent.eta);

    result.invariance_pass = result.invariance_pass && agent.invariance_ok;
    result.gap_pass = result.gap_pass && agent.gap_ok;
    result.worst_final_zv = std::max(result.worst_final_zv, agent.final_zv);
  }

  const double t_end = log.frames.back().t;
  const double window = std::min(kMatchingTailSeconds, t_end);
  result.matching_applicable = leader_constant_on(scenario.profile, t_end - window, t_end);
  if (result.matching_applicable) {
    result.matching_pass = result.worst_final_zv <= scenario.certify.tol_match;
  }
  return result;
}

Prop1Result check_prop1(const TrajectoryLog& log, const Scenario& scenario, double tol) {
  require_fd_ready(log, "check_prop1");
  Prop1Result result;
  if (!scenario.feedforward()) {
    result.note = "local-only baseline: rate bound assumes the feedforward law";
    return result;
  }
  const GammaBound gb = gamma_bound(scenario.model);
  if (!gb.value) {
    result.note = gb.note.empty() ? "model has no global concavity bound" : gb.note;
    return result;
  }
  result.gamma = *gb.value;
  for (const auto& cfg : scenario.controllers) {
    if (!(cfg.beta() > result.gamma)) {
      result.note = "gain does not dominate gamma";
      return result;
    }
  }
  double dt = 0.0;
  if (!uniform_spacing(log, &dt)) {
    result.note = "non-uniform frame spacing (guard substeps)";
    return result;
  }
  result.applicable = true;
  const int d = scenario.dim;
  result.max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < log.frames.size(); ++i) {
    const Frame& prev = log.frames[i - 1];
    const Frame& mid = log.frames[i];
    const Frame& next = log.frames[i + 1];
    const double two_dt = next.t - prev.t;
    for (int k = 1; k <= scenario.n; ++k) {
      const double fd = (next.L[k - 1] - prev.L[k - 1]) / two_dt;
      const double bound = (result.gamma - scenario.controllers[k - 1].beta()) *
                           mid.zv.segment((k - 1) * d, d).squaredNorm();
      const double violation = fd - bound;
      if (violation > result.max_violation) {
        result.max_violation = violation;
        result.worst_t = mid.t;
        result.worst_agent = k;
      }
    }
  }
  result.pass = result.max_violation <= tol;
  return result;
}

std::vector<double> lyap_formation(const TrajectoryLog& log) {
  std::vector<double> series;
  series.reserve(log.frames.size());
  for (const Frame& f : log.frames) {
    series.push_back(0.5 * f.L.sum());
  }
  return series;
}

Prop2Result check_prop2(const TrajectoryLog& log, const Scenario& scenario) {
  if (log.status != RunStatus::Completed || log.frames.size() < 2) {
    throw std::invalid_argument("check_prop2: needs a Completed log with at least 2 frames");
  }
  Prop2Result result;
  if (!scenario.feedforward()) {
    result.note = "local-only baseline: no monotonicity claim is made";
    return result;
  }
  result.applicable = true;
  const std::vector<double> series = lyap_formation(log);
  result.max_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < series.size(); ++i) {
    result.max_increase = std::max(result.max_increase, series[i + 1] - series[i]);
  }
  const double tol = scenario.certify.tol_inv * std::max(1.0, series.front());
  result.pass = result.max_increase <= tol;

  double dt = 0.0;
  if (uniform_spacing(log, &dt) && series.size() >= 3) {
    for (std::size_t i = 1; i + 1 < series.size(); ++i) {
      const Frame& mid = log.frames[i];
      const double fd = (series[i + 1] - series[i - 1]) / (log.frames[i + 1].t - log.frames[i - 1].t);
      double rhs = 0.0;
      double rhs_swapped = 0.0;
      for (int k = 1; k <= scenario.n; ++k) {
        const double r = agent_rate_rhs(mid, scenario, k);
        const int d = scenario.dim;
        const double damping = scenario.controllers[k - 1].beta() *
                               mid.zv.segment((k - 1) * d, d).squaredNorm();
        rhs += 0.5 * r;
        // Sign-swapped drift term, no 0.5 prefactor; kept for comparison.
        rhs_swapped += -(r + damping) - damping;
      }
      result.rate_residual = std::max(result.rate_residual, std::abs(fd - rhs));
      result.rate_residual_swapped =
          std::max(result.rate_residual_swapped, std::abs(fd - rhs_swapped));
    }
  }
  return result;
}

CertificationReport certify_run(const TrajectoryLog& log, const Scenario& scenario) {
  CertificationReport report;
  report.scenario_hash = log.scenario_hash;

  const auto add = [&report](CheckEntry entry) {
    if (entry.verdict == "fail") report.all_pass = false;
    report.checks.push_back(std::move(entry));
  };

  try {
    const Lemma1Result r = check_lemma1(log, scenario);
    if (!r.applicable) {
      add({"lyapunov_rate_identity", "not-applicable", 0.0, 0.0, -1, r.note});
    } else {
      add({"lyapunov_rate_identity", r.pass ? "pass" : "fail", r.worst_residual, r.worst_t,
           r.worst_agent,
           "threshold " + std::to_string(r.threshold)});
    }
  } catch (const std::invalid_argument& e) {
    add({"lyapunov_rate_identity", "not-applicable", 0.0, 0.0, -1, e.what()});
  }

  const Theorem1Result t1 = check_theorem1(log, scenario);
  if (!t1.applicable) {
    add({"local_invariance", "not-applicable", 0.0, 0.0, -1, t1.note});
    add({"gap_bound", "not-applicable", 0.0, 0.0, -1, t1.note});
    add({"velocity_matching", "not-applicable", 0.0, 0.0, -1, t1.note});
  } else {
    int worst_inv = -1, worst_gap = -1;
    double inv_excess = -std::numeric_limits<double>::infinity();
    double gap_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < t1.agents.size(); ++k) {
      const auto& a = t1.agents[k];
      if (a.max_L - a.L0 > inv_excess) {
        inv_excess = a.max_L - a.L0;
        worst_inv = static_cast<int>(k) + 1;
      }
      if (a.min_gap - a.eta < gap_margin) {
        gap_margin = a.min_gap - a.eta;
        worst_gap = static_cast<int>(k) + 1;
      }
    }
    add({"local_invariance", t1.invariance_pass ? "pass" : "fail", std::max(0.0, inv_excess),
         0.0, worst_inv, "largest rise of L_k above its initial value"});
    add({"gap_bound", t1.gap_pass ? "pass" : "fail", gap_margin, 0.0, worst_gap,
         "smallest margin of min gap over its guaranteed floor"});
    if (!t1.matching_applicable) {
      add({"velocity_matching", "not-applicable", 0.0, 0.0, -1,
           "leader input not constant over the tail window"});
    } else {
      add({"velocity_matching", t1.matching_pass ? "pass" : "fail", t1.worst_final_zv,
           log.frames.back().t, -1, "largest terminal |z_v|"});
    }
  }

  try {
    // The finite-difference oracle cannot resolve the inequality below its
    // own discretization floor, so the suite adds C*dt^2 to the tolerance;
    // rerun at a finer dt to tighten it.
    const double fd_floor = kLemma1RateConstant * log.dt * log.dt;
    const Prop1Result p1 = check_prop1(log, scenario, 1e-6 + fd_floor);
    if (!p1.applicable) {
      add({"concave_rate_bound", "not-applicable", 0.0, 0.0, -1, p1.note});
    } else {
      add({"concave_rate_bound", p1.pass ? "pass" : "fail", p1.max_violation, p1.worst_t,
           p1.worst_agent,
           "gamma = " + std::to_string(p1.gamma) + ", tolerance 1e-6 + FD floor " +
               std::to_string(fd_floor)});
    }
  } catch (const std::invalid_argument& e) {
    add({"concave_rate_bound", "not-applicable", 0.0, 0.0, -1, e.what()});
  }

  try {
    const Prop2Result p2 = check_prop2(log, scenario);
    if (!p2.applicable) {
      add({"formation_monotonicity", "not-applicable", 0.0, 0.0, -1, p2.note});
    } else {
      add({"formation_monotonicity", p2.pass ? "pass" : "fail", p2.max_increase, 0.0, -1,
           "rate residual " + std::to_string(p2.rate_residual) + ", sign-swapped variant " +
               std::to_string(p2.rate_residual_swapped)});
    }
  } catch (const std::invalid_argument& e) {
    add({"formation_monotonicity", "not-applicable", 0.0, 0.0, -1, e.what()});
  }

  if (certifiable(scenario) && scenario.dim == 1) {
    double min_signed = std::numeric_limits<double>::infinity();
    double at_t = 0.0;
    int at_k = -1;
    for (const Frame& f : log.frames) {
      for (int k = 1; k <= scenario.n; ++k) {
        const double z = f.z[(k - 1)];
        if (z < min_signed) {
          min_signed = z;
          at_t = f.t;
          at_k = k;
        }
      }
    }
    add({"order_preservation", min_signed > 0.0 ? "pass" : "fail", min_signed, at_t, at_k,
         "smallest signed gap"});
  } else {
    add({"order_preservation", "not-applicable", 0.0, 0.0, -1,
         scenario.dim == 1 ? "uncertified scenario" : "only meaningful on a 1-d roadway"});
  }

  return report;
}

SweepResult scalability_study(const Scenario& base, const std::vector<int>& n_list,
                              bool compare_variants, int workers,
                              const std::function<void(const SweepRun&)>& on_run) {
  if (n_list.empty()) {
    throw std::invalid_argument("scalability_study: empty n list");
  }
  for (int n : n_list) {
    if (n < 1) throw std::invalid_argument("scalability_study: n must be at least 1");
  }
  if (base.controllers.empty() || base.spacings.size() < 2) {
    throw std::invalid_argument("scalability_study: base scenario incomplete");
  }
  // The study varies only the string length: per-agent parameters and
  // spacings must already be identical along the base string.
  const ControllerConfig& cfg0 = base.controllers.front();
  for (const auto& cfg : base.controllers) {
    if (cfg.beta() != cfg0.beta() || cfg.variant() != cfg0.variant() ||
        cfg.apf().amplitude() != cfg0.apf().amplitude() ||
        cfg.apf().delta_sigma() != cfg0.apf().delta_sigma() ||
        cfg.sigma().sigma() != cfg0.sigma().sigma()) {
      throw std::invalid_argument("scalability_study: per-agent parameters differ along the base");
    }
  }
  const double follower_gap = base.spacings[1];
  for (std::size_t k = 1; k < base.spacings.size(); ++k) {
    if (base.spacings[k] != follower_gap) {
      throw std::invalid_argument("scalability_study: base spacings are not uniform");
    }
  }

  struct Job {
    int n;
    ControlVariant variant;
  };
  std::vector<Job> jobs;
  for (int n : n_list) jobs.push_back({n, cfg0.variant()});
  if (compare_variants) {
    const ControlVariant other = cfg0.variant() == ControlVariant::Feedforward
                                     ? ControlVariant::LocalOnly
                                     : ControlVariant::Feedforward;
    for (int n : n_list) jobs.push_back({n, other});
  }

  const auto make_scenario = [&](const Job& job) {
    Scenario sc = base;
    sc.n = job.n;
    sc.spacings.assign(static_cast<std::size_t>(job.n) + 1, follower_gap);
    sc.spacings[0] = base.spacings[0];
    sc.controllers.assign(
        static_cast<std::size_t>(job.n),
        ControllerConfig(cfg0.beta(), cfg0.apf(), cfg0.sigma(), job.variant));
    if (job.variant == ControlVariant::LocalOnly) {
      sc.certify.enabled = false;  // baseline carries no invariance claim
    }
    return sc;
  };

  std::vector<Scenario> scenarios;
  scenarios.reserve(jobs.size());
  for (const Job& job : jobs) scenarios.push_back(make_scenario(job));

  std::vector<TrajectoryLog> logs(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        const auto start = std::chrono::steady_clock::now();
        logs[i] = run(scenarios[i]);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (on_run) {
          on_run(SweepRun{jobs[i].n, jobs[i].variant, scenarios[i], logs[i], wall});
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  const int thread_count = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  SweepResult result;
  result.all_completed = true;
  result.invariance_all = true;
  result.prefix_pass = true;

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const TrajectoryLog& log = logs[i];
    const Scenario& sc = scenarios[i];
    SweepRow row;
    row.n = jobs[i].n;
    row.variant = jobs[i].variant;
    row.status = log.status;
    result.all_completed = result.all_completed && log.status == RunStatus::Completed;
    row.L0.assign(sc.n, 0.0);
    row.max_L.assign(sc.n, 0.0);
    row.max_zv.assign(sc.n, 0.0);
    row.settle_time.assign(sc.n, 0.0);
    if (!log.frames.empty()) {
      const int d = sc.dim;
      for (int k = 1; k <= sc.n; ++k) {
        row.L0[k - 1] = log.frames.front().L[k - 1];
        for (const Frame& f : log.frames) {
          row.max_L[k - 1] = std::max(row.max_L[k - 1], f.L[k - 1]);
          const double zv = f.zv.segment((k - 1) * d, d).norm();
          row.max_zv[k - 1] = std::max(row.max_zv[k - 1], zv);
          if (zv > kSettleThreshold) row.settle_time[k - 1] = f.t;
        }
      }
    }
    row.invariance_pass = log.status == RunStatus::Completed;
    for (int k = 1; k <= sc.n && row.invariance_pass; ++k) {
      row.invariance_pass =
          row.max_L[k - 1] <= row.L0[k - 1] * (1.0 + sc.certify.tol_inv) + kInvarianceFloor;
    }
    if (jobs[i].variant == cfg0.variant()) {
      result.invariance_all = result.invariance_all && row.invariance_pass;
    }
    result.rows.push_back(std::move(row));
  }

  // Prefix equivalence against the smallest run of the same variant: the
  // closed loop of agent k never sees agents behind it, so appending
  // followers must not move the shared prefix.
  for (ControlVariant variant : {ControlVariant::Feedforward, ControlVariant::LocalOnly}) {
    int base_idx = -1;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].variant != variant) continue;
      if (base_idx < 0 || jobs[i].n < jobs[base_idx].n) base_idx = static_cast<int>(i);
    }
    if (base_idx < 0) continue;
    const TrajectoryLog& ref = logs[base_idx];
    const int d = base.dim;
    const Eigen::Index prefix_len = static_cast<Eigen::Index>(jobs[base_idx].n + 1) * d;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (static_cast<int>(i) == base_idx || jobs[i].variant != variant) continue;
      PrefixCheck check;
      check.n = jobs[i].n;
      check.variant = variant;
      const TrajectoryLog& other = logs[i];
      if (other.frames.size() != ref.frames.size() || other.status != RunStatus::Completed ||
          ref.status != RunStatus::Completed) {
        check.max_abs_diff = std::numeric_limits<double>::infinity();
      } else {
        for (std::size_t f = 0; f < ref.frames.size(); ++f) {
          check.max_abs_diff = std::max(
              check.max_abs_diff, (other.frames[f].y.head(prefix_len) -
                                   ref.frames[f].y.head(prefix_len)).cwiseAbs().maxCoeff());
          check.max_abs_diff = std::max(
              check.max_abs_diff, (other.frames[f].v.head(prefix_len) -
                                   ref.frames[f].v.head(prefix_len)).cwiseAbs().maxCoeff());
        }
      }
      check.pass = check.max_abs_diff <= kPrefixTolerance;
      result.prefix_pass = result.prefix_pass && check.pass;
      result.prefix.push_back(check);
    }
  }

  return result;
}

}  // namespace platoon
