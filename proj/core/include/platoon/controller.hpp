#pragma once

#include "platoon/apf.hpp"
#include "platoon/common.hpp"
#include "platoon/dynamics.hpp"
#include "platoon/sigma.hpp"

#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace platoon {

enum class ControlVariant {
  Feedforward,  // u_k = u_{k-1} + local term (predecessor control received wirelessly)
  LocalOnly,    // u_k = local term only (relative-measurement baseline)
};

/// Per-agent controller parameters.
class ControllerConfig {
 public:
  ControllerConfig(double beta, ApfParams apf, SigmaParam sigma,
                   ControlVariant variant = ControlVariant::Feedforward);
  double beta() const noexcept { return beta_; }
  const ApfParams& apf() const noexcept { return apf_; }
  const SigmaParam& sigma() const noexcept { return sigma_; }
  ControlVariant variant() const noexcept { return variant_; }

 private:
  double beta_;
  ApfParams apf_;
  SigmaParam sigma_;
  ControlVariant variant_;
};

struct ConstantInput {
  double u0 = 0.0;
};

/// Linear interpolation through (t, value) breakpoints; holds the boundary
/// values outside them. A repeated breakpoint time encodes a jump; the
/// profile is right-continuous there.
struct PiecewiseLinearInput {
  std::vector<std::pair<double, double>> points;
};

struct SinusoidInput {
  double amplitude = 0.0;
  double frequency_hz = 0.0;
  double phase = 0.0;
};

/// Accelerate, coast, brake, coast: +accel for accel_duration, zero input
/// for cruise_duration, -decel for decel_duration, zero afterwards.
struct StopAndGo {
  double accel = 0.0;
  double accel_duration = 0.0;
  double cruise_duration = 0.0;
  double decel = 0.0;
  double decel_duration = 0.0;
};

using LeaderProfile = std::variant<ConstantInput, PiecewiseLinearInput, SinusoidInput, StopAndGo>;

void validate_profile(const LeaderProfile& profile);

/// Raw profile value at time t (defined for all t >= 0).
double leader_profile_eval(const LeaderProfile& profile, double t);

/// True iff the profile is constant over [t0, t1] (exact, by family).
bool leader_constant_on(const LeaderProfile& profile, double t0, double t1);

/// Reference input of the uncontrolled lead vehicle, as a d-vector along
/// axis 0. t must lie in [0, horizon].
Vec leader_input(const LeaderProfile& profile, double t, double horizon, int dim = 1);

/// Local control component from onboard relative measurements:
///   u_local = -beta * (v_k - v_prev) - grad_{y_k} V(||z||_sigma)
///           =  beta * z_v            - apf_gap_gradient(z)
/// with z = y_prev - y_k and z_v = v_prev - v_k. Attracts toward the
/// desired gap from above, repels below it, damps relative velocity.
Vec local_control(const Eigen::Ref<const Vec>& z, const Eigen::Ref<const Vec>& z_v,
                  const ControllerConfig& cfg);

/// Feedforward composition: the predecessor's control plus the local term.
Vec compose_control(const Eigen::Ref<const Vec>& u_prev, const Eigen::Ref<const Vec>& u_local);

/// One synchronous control pass over the whole string, leader first.
/// Under Feedforward each follower adds its local term to the control its
/// predecessor computed in this same pass (zero-delay wireless link);
/// under LocalOnly the received term is dropped.
std::vector<Vec> compute_all_controls(const std::vector<AgentState>& states, double t,
                                      std::span<const ControllerConfig> configs,
                                      const LeaderProfile& profile, double horizon);

}  // namespace platoon
