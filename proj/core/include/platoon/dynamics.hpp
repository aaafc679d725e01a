#pragma once

#include "platoon/common.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace platoon {

/// Position/velocity of one vehicle (d-dimensional; d = 1 on a roadway).
struct AgentState {
  Vec position;
  Vec velocity;
};

/// f(v) = -c1 * v.
struct LinearDrag {
  double c1 = 0.0;
};

/// f(v) = -c1 * v - c2 * |v| * v (speed-scaled quadratic drag).
struct SignedQuadraticDrag {
  double c1 = 0.0;
  double c2 = 0.0;
};

/// User-supplied dynamics. alpha_hint must upper-bound
/// (v2-v1)'(f(v2)-f(v1)) / |v2-v1|^2; runs cross-check it by sampling
/// and refuse to start if the sampled value exceeds the hint.
struct CustomModel {
  std::function<Vec(const Vec&)> f;
  double alpha_hint = 0.0;
};

using VehicleModel = std::variant<LinearDrag, SignedQuadraticDrag, CustomModel>;

void validate_model(const VehicleModel& m);

/// The drift term f(v).
Vec model_f(const VehicleModel& m, const Eigen::Ref<const Vec>& v);

/// v-dot = f(v) + u.
Vec accel(const VehicleModel& m, const Eigen::Ref<const Vec>& v, const Eigen::Ref<const Vec>& u);

/// Tightest analytic one-sided Lipschitz constant alpha with
/// (v2-v1)'(f(v2)-f(v1)) <= alpha * |v2-v1|^2 for all v1, v2.
/// Both drag families give -c1; Custom returns its alpha_hint.
double alpha_bound(const VehicleModel& m);

/// Axis-aligned velocity sampling box (lo < hi componentwise).
struct VelocityBox {
  Vec lo;
  Vec hi;
};

/// Sampled estimate of alpha over random pairs in the box. Deterministic for
/// a fixed seed. Never exceeds alpha_bound by more than roundoff for the
/// built-in families.
double alpha_estimate(const VehicleModel& m, const VelocityBox& box, int samples,
                      std::uint64_t seed = 0x51a7005u);

/// sup f' for models that are concave and differentiable everywhere; empty
/// (with a reason) otherwise.
struct GammaBound {
  std::optional<double> value;
  std::string note;
};

GammaBound gamma_bound(const VehicleModel& m);

/// Initial bumper-to-bumper spacings l_0 ... l_n, meters; all positive.
class InitialSpacing {
 public:
  explicit InitialSpacing(std::vector<double> lengths);
  const std::vector<double>& lengths() const noexcept { return lengths_; }
  std::size_t agent_count() const noexcept { return lengths_.size(); }

 private:
  std::vector<double> lengths_;
};

/// Stationary start: agent k at position -(l_0 + ... + l_k) along axis 0,
/// zero velocity, so the initial gap ahead of follower k is exactly l_k.
std::vector<AgentState> initial_platoon(const InitialSpacing& spacings, int dim = 1);

}  // namespace platoon
