#include "platoon/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace platoon {

ControllerConfig::ControllerConfig(double beta, ApfParams apf, SigmaParam sigma,
                                   ControlVariant variant)
    : beta_(beta), apf_(std::move(apf)), sigma_(std::move(sigma)), variant_(variant) {
  if (!std::isfinite(beta) || beta <= 0.0) {
    throw std::invalid_argument("ControllerConfig: beta must be a positive finite real");
  }
}

void validate_profile(const LeaderProfile& profile) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConstantInput>) {
          if (!std::isfinite(p.u0)) throw ConfigError("ConstantInput: u0 must be finite");
        } else if constexpr (std::is_same_v<T, PiecewiseLinearInput>) {
          if (p.points.empty()) throw ConfigError("PiecewiseLinearInput: no breakpoints");
          double prev_t = -std::numeric_limits<double>::infinity();
          for (const auto& [t, v] : p.points) {
            if (!std::isfinite(t) || !std::isfinite(v)) {
              throw ConfigError("PiecewiseLinearInput: non-finite breakpoint");
            }
            if (t < prev_t) throw ConfigError("PiecewiseLinearInput: breakpoints must be sorted");
            prev_t = t;
          }
        } else if constexpr (std::is_same_v<T, SinusoidInput>) {
          if (!std::isfinite(p.amplitude) || !std::isfinite(p.frequency_hz) ||
              !std::isfinite(p.phase)) {
            throw ConfigError("SinusoidInput: parameters must be finite");
          }
        } else {
          if (!std::isfinite(p.accel) || !std::isfinite(p.decel) ||
              !std::isfinite(p.accel_duration) || !std::isfinite(p.cruise_duration) ||
              !std::isfinite(p.decel_duration) || p.accel_duration < 0.0 ||
              p.cruise_duration < 0.0 || p.decel_duration < 0.0) {
            throw ConfigError("StopAndGo: durations must be nonnegative, parameters finite");
          }
        }
      },
      profile);
}

double leader_profile_eval(const LeaderProfile& profile, double t) {
  return std::visit(
      [t](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConstantInput>) {
          return p.u0;
        } else if constexpr (std::is_same_v<T, PiecewiseLinearInput>) {
          const auto& pts = p.points;
          if (t <= pts.front().first) return pts.front().second;
          if (t >= pts.back().first) return pts.back().second;
          auto hi = std::upper_bound(pts.begin(), pts.end(), t,
                                     [](double x, const auto& pt) { return x < pt.first; });
          auto lo = hi - 1;  // last point with time <= t
          // Right continuity: a repeated time encodes a jump and lo is the
          // later of the duplicates, so its value is the one that holds.
          if (lo->first == t) return lo->second;
          const double w = (t - lo->first) / (hi->first - lo->first);
          return lo->second + w * (hi->second - lo->second);
        } else if constexpr (std::is_same_v<T, SinusoidInput>) {
          return p.amplitude * std::sin(2.0 * std::numbers::pi * p.frequency_hz * t + p.phase);
        } else {
          const double t1 = p.accel_duration;
          const double t2 = t1 + p.cruise_duration;
          const double t3 = t2 + p.decel_duration;
          if (t < t1) return p.accel;
          if (t < t2) return 0.0;
          if (t < t3) return -p.decel;
          return 0.0;
        }
      },
      profile);
}

bool leader_constant_on(const LeaderProfile& profile, double t0, double t1) {
  if (t1 < t0) std::swap(t0, t1);
  return std::visit(
      [&](const auto& p) -> bool {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConstantInput>) {
          return true;
        } else if constexpr (std::is_same_v<T, PiecewiseLinearInput>) {
          const double v0 = leader_profile_eval(profile, t0);
          if (leader_profile_eval(profile, t1) != v0) return false;
          for (const auto& [t, v] : p.points) {
            if (t > t0 && t < t1 && v != v0) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, SinusoidInput>) {
          return p.amplitude == 0.0 || p.frequency_hz == 0.0 || t0 == t1;
        } else {
          // Right-continuous piecewise-constant: the values taken on [t0, t1]
          // are eval(t0) plus eval(b) for every breakpoint b inside the window.
          const double t_a = p.accel_duration;
          const double t_c = t_a + p.cruise_duration;
          const double t_d = t_c + p.decel_duration;
          const double v0 = leader_profile_eval(profile, t0);
          for (double b : {t_a, t_c, t_d}) {
            if (b > t0 && b < t1 && leader_profile_eval(profile, b) != v0) return false;
          }
          return leader_profile_eval(profile, t1) == v0;
        }
      },
      profile);
}

Vec leader_input(const LeaderProfile& profile, double t, double horizon, int dim) {
  if (!std::isfinite(t) || t < 0.0 || t > horizon) {
    throw std::invalid_argument("leader_input: t outside [0, T]");
  }
  Vec u = Vec::Zero(dim);
  u[0] = leader_profile_eval(profile, t);
  return u;
}

Vec local_control(const Eigen::Ref<const Vec>& z, const Eigen::Ref<const Vec>& z_v,
                  const ControllerConfig& cfg) {
  if (z.squaredNorm() == 0.0) {
    throw CollisionError("local_control: zero gap", -1);
  }
  if (!z_v.allFinite()) {
    throw std::invalid_argument("local_control: non-finite relative velocity");
  }
  return cfg.beta() * z_v - apf_gap_gradient(z, cfg.apf(), cfg.sigma());
}

Vec compose_control(const Eigen::Ref<const Vec>& u_prev, const Eigen::Ref<const Vec>& u_local) {
  return u_prev + u_local;
}

std::vector<Vec> compute_all_controls(const std::vector<AgentState>& states, double t,
                                      std::span<const ControllerConfig> configs,
                                      const LeaderProfile& profile, double horizon) {
  if (states.empty()) {
    throw std::invalid_argument("compute_all_controls: empty platoon");
  }
  if (configs.size() + 1 != states.size()) {
    throw std::invalid_argument("compute_all_controls: need one config per follower");
  }
  const int dim = static_cast<int>(states.front().position.size());
  std::vector<Vec> controls;
  controls.reserve(states.size());
  controls.push_back(leader_input(profile, t, horizon, dim));
  for (std::size_t k = 1; k < states.size(); ++k) {
    const Vec z = states[k - 1].position - states[k].position;
    if (z.squaredNorm() == 0.0) {
      throw CollisionError("compute_all_controls: coincident pair", static_cast<int>(k));
    }
    const Vec z_v = states[k - 1].velocity - states[k].velocity;
    const ControllerConfig& cfg = configs[k - 1];
    Vec u_local = local_control(z, z_v, cfg);
    if (cfg.variant() == ControlVariant::Feedforward) {
      controls.push_back(compose_control(controls[k - 1], u_local));
    } else {
      controls.push_back(std::move(u_local));
    }
  }
  return controls;
}

}  // namespace platoon
