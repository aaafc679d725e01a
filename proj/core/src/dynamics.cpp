#include "platoon/dynamics.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace platoon {

namespace {

void require_finite(const Eigen::Ref<const Vec>& v, const char* what) {
  if (!v.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite input");
  }
}

}  // namespace

void validate_model(const VehicleModel& m) {
  std::visit(
      [](const auto& model) {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, LinearDrag>) {
          if (!std::isfinite(model.c1) || model.c1 < 0.0) {
            throw ConfigError("LinearDrag: c1 must be nonnegative and finite");
          }
        } else if constexpr (std::is_same_v<T, SignedQuadraticDrag>) {
          if (!std::isfinite(model.c1) || model.c1 < 0.0 || !std::isfinite(model.c2) ||
              model.c2 < 0.0) {
            throw ConfigError("SignedQuadraticDrag: c1, c2 must be nonnegative and finite");
          }
        } else {
          if (!model.f) {
            throw ConfigError("CustomModel: missing dynamics function");
          }
          if (!std::isfinite(model.alpha_hint)) {
            throw ConfigError("CustomModel: alpha_hint must be finite");
          }
        }
      },
      m);
}

Vec model_f(const VehicleModel& m, const Eigen::Ref<const Vec>& v) {
  require_finite(v, "model_f");
  return std::visit(
      [&](const auto& model) -> Vec {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, LinearDrag>) {
          return -model.c1 * v;
        } else if constexpr (std::is_same_v<T, SignedQuadraticDrag>) {
          return -model.c1 * v - model.c2 * v.norm() * v;
        } else {
          return model.f(v);
        }
      },
      m);
}

Vec accel(const VehicleModel& m, const Eigen::Ref<const Vec>& v, const Eigen::Ref<const Vec>& u) {
  require_finite(u, "accel");
  return model_f(m, v) + u;
}

double alpha_bound(const VehicleModel& m) {
  return std::visit(
      [](const auto& model) -> double {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, LinearDrag>) {
          return -model.c1;
        } else if constexpr (std::is_same_v<T, SignedQuadraticDrag>) {
          // v -> |v| v is monotone (its Jacobian |v| I + v v'/|v| is PSD),
          // so the quadratic term only helps; the linear part dominates.
          return -model.c1;
        } else {
          return model.alpha_hint;
        }
      },
      m);
}

double alpha_estimate(const VehicleModel& m, const VelocityBox& box, int samples,
                      std::uint64_t seed) {
  if (samples < 2) {
    throw std::invalid_argument("alpha_estimate: need at least 2 samples");
  }
  if (box.lo.size() != box.hi.size() || box.lo.size() == 0) {
    throw std::invalid_argument("alpha_estimate: box bounds must have matching nonzero size");
  }
  for (Eigen::Index i = 0; i < box.lo.size(); ++i) {
    if (!(box.lo[i] < box.hi[i])) {
      throw std::invalid_argument("alpha_estimate: degenerate box (zero volume)");
    }
  }
  const Eigen::Index dim = box.lo.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto draw = [&] {
    Vec v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      v[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unit(rng);
    }
    return v;
  };

  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const Vec v1 = draw();
    const Vec v2 = draw();
    const Vec dv = v2 - v1;
    const double q = dv.squaredNorm();
    if (q == 0.0) continue;
    const double ratio = dv.dot(model_f(m, v2) - model_f(m, v1)) / q;
    best = std::max(best, ratio);
  }
  if (!std::isfinite(best)) {
    throw std::invalid_argument("alpha_estimate: no usable sample pairs");
  }
  return best;
}

GammaBound gamma_bound(const VehicleModel& m) {
  return std::visit(
      [](const auto& model) -> GammaBound {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, LinearDrag>) {
          return {-model.c1, ""};
        } else if constexpr (std::is_same_v<T, SignedQuadraticDrag>) {
          if (model.c2 == 0.0) {
            return {-model.c1, ""};
          }
          return {std::nullopt,
                  "signed quadratic drag is not globally concave (f'' changes sign at v = 0); "
                  "concave only on the nonnegative-velocity half-line"};
        } else {
          return {std::nullopt, "custom model: curvature unknown"};
        }
      },
      m);
}

InitialSpacing::InitialSpacing(std::vector<double> lengths) : lengths_(std::move(lengths)) {
  if (lengths_.empty()) {
    throw ConfigError("InitialSpacing: need at least one spacing entry");
  }
  for (double l : lengths_) {
    if (!std::isfinite(l) || l <= 0.0) {
      throw ConfigError("InitialSpacing: all spacings must be positive and finite");
    }
  }
}

std::vector<AgentState> initial_platoon(const InitialSpacing& spacings, int dim) {
  if (dim < 1) {
    throw ConfigError("initial_platoon: dim must be at least 1");
  }
  std::vector<AgentState> states;
  states.reserve(spacings.agent_count());
  double offset = 0.0;
  for (double l : spacings.lengths()) {
    offset -= l;
    AgentState s;
    s.position = Vec::Zero(dim);
    s.position[0] = offset;
    s.velocity = Vec::Zero(dim);
    states.push_back(std::move(s));
  }
  return states;
}

}  // namespace platoon
