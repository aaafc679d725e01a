// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Usage: acceptance [scenarios_dir]

#include "platoon/analysis.hpp"
#include "platoon/apf.hpp"
#include "platoon/scenario_io.hpp"
#include "platoon/sigma.hpp"
#include "platoon/simulator.hpp"
#include "platoon/trajectory_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

using namespace platoon;
namespace fs = std::filesystem;

namespace {

struct Harness {
  int failures = 0;

  void criterion(int id, const std::string& name, double budget_seconds,
                 const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool pass = false;
    const auto start = std::chrono::steady_clock::now();
    try {
      pass = body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds >= budget_seconds) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("over time budget");
    }
    if (!pass) ++failures;
    std::printf("%s  %2d. %-28s (%.2fs)%s%s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                seconds, detail.empty() ? "" : "  -- ", detail.c_str());
    std::fflush(stdout);
  }
};

Vec scalar(double x) {
  Vec v(1);
  v << x;
  return v;
}

std::mt19937_64 rng(0xacce97edull);

double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec random_vec(int d, double lo, double hi) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = uniform(lo, hi);
  return v;
}

Vec central_grad(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double hi = f(probe);
    probe[i] = x[i] - h;
    const double lo = f(probe);
    probe[i] = x[i];
    g[i] = (hi - lo) / (2.0 * h);
  }
  return g;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path scenarios = argc > 1 ? fs::path(argv[1]) : fs::path("scenarios");
  Harness harness;

  const Scenario flagship = load_scenario(scenarios / "flagship.ini");
  TrajectoryLog flagship_log;  // produced by criterion 4, reused later

  harness.criterion(1, "gradient correctness", 1.0, [](std::string& detail) {
    const double h = 1e-5;
    for (int i = 0; i < 1000; ++i) {
      const int d = 1 + i % 3;
      const SigmaParam sp(uniform(0.4, 2.5));
      const Vec x = random_vec(d, -100.0, 100.0);
      const Vec numeric =
          central_grad([&](const Vec& p) { return sigma_norm(p, sp); }, x, h);
      if ((sigma_norm_grad(x, sp) - numeric).norm() > 1e-6 * std::max(1e-12, numeric.norm())) {
        detail = "sigma_norm_grad mismatch";
        return false;
      }
    }
    for (int i = 0; i < 1000; ++i) {
      const ApfParams p(uniform(0.2, 5.0), uniform(0.5, 5.0));
      const double s = uniform(0.05, 20.0);
      const double numeric = (apf_value(s + h, p) - apf_value(s - h, p)) / (2.0 * h);
      if (std::abs(apf_deriv(s, p) - numeric) > 1e-6 * std::max(1e-12, std::abs(numeric))) {
        detail = "apf_deriv mismatch";
        return false;
      }
    }
    for (int i = 0; i < 1000; ++i) {
      const int d = 1 + i % 3;
      const ApfParams p(uniform(0.2, 4.0), uniform(0.5, 4.0));
      const SigmaParam sp(uniform(0.4, 2.5));
      Vec y_prev = random_vec(d, -10.0, 10.0);
      Vec y_k = random_vec(d, -10.0, 10.0);
      if ((y_prev - y_k).norm() < 0.2) y_prev.array() += 0.5;
      const Vec numeric = central_grad(
          [&](const Vec& pos) { return apf_value(sigma_norm(y_prev - pos, sp), p); }, y_k, h);
      if ((apf_grad_follower(y_k, y_prev, p, sp) - numeric).norm() >
          1e-6 * std::max(1e-9, numeric.norm())) {
        detail = "apf_grad_follower mismatch";
        return false;
      }
    }
    return true;
  });

  harness.criterion(2, "potential axiom suite", 1.0, [](std::string& detail) {
    if (!(apf_value(1e-12, ApfParams(1.0, 1.0)) > 1e10)) {
      detail = "barrier too weak near contact";
      return false;
    }
    const ApfSelfTest self = run_apf_self_test(RationalBarrierApf(ApfParams(1.0, 1.0)));
    if (!self.pass() || self.min_location_error > 1e-10) {
      detail = "minimum not located within 1e-10";
      return false;
    }
    for (int i = 0; i < 1000; ++i) {
      const int d = 1 + i % 3;
      const ApfParams p(uniform(0.2, 4.0), uniform(0.5, 4.0));
      const SigmaParam sp(uniform(0.4, 2.5));
      const Vec y_prev = random_vec(d, -10.0, 10.0);
      Vec y_k = random_vec(d, -10.0, 10.0);
      if ((y_prev - y_k).squaredNorm() == 0.0) y_k.array() += 1.0;
      if ((apf_grad_follower(y_k, y_prev, p, sp) + apf_grad_predecessor(y_k, y_prev, p, sp))
              .norm() != 0.0) {
        detail = "anti-symmetry not exact";
        return false;
      }
    }
    return true;
  });

  harness.criterion(3, "integrator order", 1.0, [](std::string& detail) {
    Scenario sc;
    sc.n = 1;
    sc.model = LinearDrag{0.5};
    sc.spacings = {10.0, 10.0};
    sc.controllers.assign(
        1, ControllerConfig(1.0, ApfParams(1.0, sigma_norm(scalar(10.0), SigmaParam(1.0))),
                            SigmaParam(1.0)));
    sc.profile = ConstantInput{0.0};
    sc.T = 10.0;
    const double v0 = 5.0;
    const auto end_velocity = [&sc, v0](double dt) {
      auto states = initial_platoon(InitialSpacing(sc.spacings));
      for (auto& s : states) s.velocity = scalar(v0);
      const int steps = static_cast<int>(std::round(sc.T / dt));
      for (int i = 0; i < steps; ++i) states = rk4_step(states, i * dt, dt, sc);
      return states[0].velocity[0];
    };
    const double exact = v0 * std::exp(-0.5 * sc.T);
    const double err1 = std::abs(end_velocity(0.01) - exact) / exact;
    const double err2 = std::abs(end_velocity(0.005) - exact) / exact;
    const double ratio = err1 / err2;
    detail = "rel err " + std::to_string(err1) + ", halving ratio " + std::to_string(ratio);
    return err1 < 1e-8 && ratio > 12.0 && ratio < 20.0;
  });

  harness.criterion(4, "Lyapunov rate identity", 10.0, [&](std::string& detail) {
    flagship_log = run(flagship);
    if (flagship_log.status != RunStatus::Completed) {
      detail = "flagship run did not complete";
      return false;
    }
    const Lemma1Result coarse = check_lemma1(flagship_log, flagship);
    if (!coarse.applicable || !coarse.pass) {
      detail = "identity failed at dt=0.01";
      return false;
    }
    Scenario fine = flagship;
    fine.dt = 0.005;
    const Lemma1Result halved = check_lemma1(run(fine), fine);
    const double ratio = coarse.worst_residual / halved.worst_residual;
    if (!halved.pass || ratio < 2.5 || ratio > 6.0) {
      detail = "halving ratio " + std::to_string(ratio);
      return false;
    }

    // Rate is potential-amplitude invariant at matched states.
    Scenario scaled = flagship;
    std::vector<ControllerConfig> big;
    for (const auto& cfg : flagship.controllers) {
      big.emplace_back(cfg.beta(),
                       ApfParams(10.0 * cfg.apf().amplitude(), cfg.apf().delta_sigma()),
                       cfg.sigma(), cfg.variant());
    }
    scaled.controllers = big;
    double worst = 0.0;
    for (const Frame& f : flagship_log.frames) {
      for (int k = 1; k <= flagship.n; ++k) {
        const double a = lyap_rate_rhs(scalar(f.zv[k - 1]), scalar(f.v[k - 1]), scalar(f.v[k]),
                                       flagship.controllers[k - 1].beta(), flagship.model);
        const double b = lyap_rate_rhs(scalar(f.zv[k - 1]), scalar(f.v[k - 1]), scalar(f.v[k]),
                                       scaled.controllers[k - 1].beta(), scaled.model);
        worst = std::max(worst, std::abs(a - b));
      }
    }
    if (worst >= 1e-9) {
      detail = "amplitude-dependent rate";
      return false;
    }
    const Lemma1Result scaled_result = check_lemma1(run(scaled), scaled);
    detail = "residual " + std::to_string(coarse.worst_residual) + ", ratio " +
             std::to_string(ratio);
    return scaled_result.applicable && scaled_result.pass;
  });

  harness.criterion(5, "invariance, gap bound, matching", 10.0, [&](std::string& detail) {
    const Theorem1Result result = check_theorem1(flagship_log, flagship);
    if (!result.applicable) {
      detail = "not applicable";
      return false;
    }
    detail = "max final |zv| " + std::to_string(result.worst_final_zv);
    return result.invariance_pass && result.gap_pass && result.matching_applicable &&
           result.matching_pass;
  });

  harness.criterion(6, "concave rate bound", 10.0, [&](std::string& detail) {
    Scenario fine = flagship;
    fine.dt = 1e-3;  // strict 1e-6 tolerance needs the FD floor below it
    const TrajectoryLog log = run(fine);
    const Prop1Result result = check_prop1(log, fine, 1e-6);
    detail = "max violation " + std::to_string(result.max_violation);
    return result.applicable && result.pass;
  });

  harness.criterion(7, "formation monotonicity", 10.0, [&](std::string& detail) {
    const Prop2Result result = check_prop2(flagship_log, flagship);
    detail = "max increase " + std::to_string(result.max_increase);
    return result.applicable && result.pass;
  });

  harness.criterion(8, "scalability and decoupling", 120.0, [&](std::string& detail) {
    const SweepResult result = scalability_study(flagship, {5, 25, 100}, true, 2);
    const fs::path out = fs::temp_directory_path() / "platoonsim-acceptance";
    fs::create_directories(out);
    write_text_file(out / "comparison.csv", sweep_comparison_csv(result));
    int variants_seen = 0;
    for (const SweepRow& row : result.rows) {
      variants_seen |= row.variant == ControlVariant::Feedforward ? 1 : 2;
    }
    double worst_prefix = 0.0;
    for (const PrefixCheck& check : result.prefix) {
      worst_prefix = std::max(worst_prefix, check.max_abs_diff);
    }
    detail = "prefix max diff " + std::to_string(worst_prefix) + ", table " +
             (out / "comparison.csv").string();
    return result.all_completed && result.invariance_all && result.prefix_pass &&
           variants_seen == 3;
  });

  harness.criterion(9, "collision guard", 5.0, [&](std::string& detail) {
    const Scenario brake = load_scenario(scenarios / "collision_brake.ini");
    const TrajectoryLog crash = run(brake);
    if (crash.status != RunStatus::Collision) {
      detail = "unguarded braking did not collide";
      return false;
    }
    const Scenario guarded = load_scenario(scenarios / "near_barrier.ini");
    const TrajectoryLog safe = run(guarded);
    if (safe.status != RunStatus::Completed) {
      detail = "barrier did not prevent the collision";
      return false;
    }
    const Theorem1Result bound = check_theorem1(safe, guarded);
    detail = "floor " + std::to_string(bound.agents[0].eta) + " vs eps " +
             std::to_string(guarded.collision_epsilon);
    return bound.applicable && bound.gap_pass &&
           bound.agents[0].eta > guarded.collision_epsilon;
  });

  harness.criterion(10, "byte-identical reruns", 30.0, [&](std::string& detail) {
    const std::string a = trajectory_csv(run(flagship));
    const std::string b = trajectory_csv(run(flagship));
    detail = std::to_string(a.size()) + " bytes";
    return !a.empty() && a == b;
  });

  if (harness.failures > 0) {
    std::printf("%d criterion(s) failed\n", harness.failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
