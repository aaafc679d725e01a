#pragma once

#include "platoon/common.hpp"
#include "platoon/controller.hpp"
#include "platoon/dynamics.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace platoon {

/// Step-halving guard against barrier stiffness. A stage whose control
/// magnitude exceeds the ceiling retries the step at dt/2, up to
/// max_halvings deep. The default ceiling disables the guard.
struct GuardSettings {
  double control_ceiling = std::numeric_limits<double>::infinity();
  int max_halvings = 20;
};

struct CertifySettings {
  bool enabled = true;
  double tol_inv = 1e-6;    // relative slack on sub-level-set invariance
  double tol_match = 1e-3;  // terminal relative-velocity norm
};

/// Full experiment description.
struct Scenario {
  int n = 1;    // followers (agents 1..n; agent 0 is the leader)
  int dim = 1;
  VehicleModel model = LinearDrag{0.5};
  std::vector<double> spacings;             // l_0 .. l_n, meters
  std::vector<ControllerConfig> controllers;  // size n, follower k uses [k-1]
  LeaderProfile profile = ConstantInput{0.0};
  double T = 60.0;
  double dt = 0.01;
  double collision_epsilon = 0.01;
  int stride = 1;  // record every stride-th completed step (first/last always)
  GuardSettings guard;
  CertifySettings certify;

  /// Throws ConfigError on any violated invariant; runs the potential
  /// self-test and, for certified runs, the gain-vs-alpha gate and the
  /// sampled cross-check of a Custom model's alpha_hint.
  void validate() const;

  bool feedforward() const;
  double min_follower_spacing() const;
};

enum class RunStatus { Completed, Collision, Diverged };

const char* to_string(RunStatus s);

/// One recorded instant: states, controls, pairwise errors, and the local
/// Lyapunov values L_k = V(||z_k||_sigma) + 0.5*|z_k^v|^2 for k >= 1.
struct Frame {
  double t = 0.0;
  Vec y;   // (n+1)*dim
  Vec v;   // (n+1)*dim
  Vec u;   // (n+1)*dim
  Vec z;   // n*dim, z_k = y_{k-1} - y_k
  Vec zv;  // n*dim
  Vec L;   // n
};

struct TrajectoryLog {
  int n = 0;
  int dim = 1;
  double dt = 0.0;
  int stride = 1;
  RunStatus status = RunStatus::Completed;
  int fault_agent = -1;   // offending follower/agent for Collision/Diverged
  double min_gap = std::numeric_limits<double>::infinity();  // over every step taken
  std::uint64_t scenario_hash = 0;
  std::size_t total_steps = 0;  // completed integration steps (including substeps)
  std::vector<Frame> frames;
};

/// Classical 4-stage Runge-Kutta step of the closed loop; the control pass
/// reruns inside every stage, so the discretization sees the continuous-time
/// law. Pure function of its inputs.
std::vector<AgentState> rk4_step(const std::vector<AgentState>& states, double t, double dt,
                                 const Scenario& scenario);

struct GuardedStep {
  std::vector<AgentState> states;
  double dt_used = 0.0;
  int halvings = 0;
};

/// rk4_step wrapped in the stiffness guard: halves dt until the stage
/// controls fit under the ceiling, never altering the dynamics.
GuardedStep guard_step(const std::vector<AgentState>& states, double t, double dt,
                       const Scenario& scenario);

/// Integrate the scenario over [0, T] from the standing start. Terminates
/// early with Collision when a gap reaches collision_epsilon and with
/// Diverged on a non-finite state; otherwise Completed.
TrajectoryLog run(const Scenario& scenario);

}  // namespace platoon
