#include "platoon/apf.hpp"

#include <cmath>
#include <limits>

namespace platoon {

ApfParams::ApfParams(double amplitude, double delta_sigma)
    : amplitude_(amplitude), delta_sigma_(delta_sigma) {
  if (!std::isfinite(amplitude) || amplitude <= 0.0) {
    throw std::invalid_argument("ApfParams: amplitude must be a positive finite real");
  }
  if (!std::isfinite(delta_sigma) || delta_sigma <= 0.0) {
    throw std::invalid_argument("ApfParams: delta_sigma must be a positive finite real");
  }
}

double apf_value(double s, const ApfParams& p) {
  if (!std::isfinite(s)) {
    throw std::invalid_argument("apf_value: non-finite gap");
  }
  if (s <= 0.0) {
    throw std::domain_error("apf_value: gap must be positive (barrier excludes contact)");
  }
  const double d = s - p.delta_sigma();
  return p.amplitude() * d * d / s;
}

double apf_deriv(double s, const ApfParams& p) {
  if (!std::isfinite(s)) {
    throw std::invalid_argument("apf_deriv: non-finite gap");
  }
  if (s <= 0.0) {
    throw std::domain_error("apf_deriv: gap must be positive");
  }
  const double delta = p.delta_sigma();
  return p.amplitude() * (s - delta) * (s + delta) / (s * s);
}

Vec apf_gap_gradient(const Eigen::Ref<const Vec>& z, const ApfParams& p, const SigmaParam& sp) {
  if (!z.allFinite()) {
    throw std::invalid_argument("apf_gap_gradient: non-finite gap vector");
  }
  const double q = z.squaredNorm();
  if (q == 0.0) {
    throw CollisionError("apf_gap_gradient: coincident positions", -1);
  }
  const double s = sigma_norm(z, sp);
  // grad_{y_k} s = -z / (sigma * sqrt(1 + |z|^2)) for z = y_prev - y_k.
  const double scale = -apf_deriv(s, p) / (sp.sigma() * std::sqrt(1.0 + q));
  return scale * z;
}

Vec apf_grad_follower(const Eigen::Ref<const Vec>& y_k, const Eigen::Ref<const Vec>& y_prev,
                      const ApfParams& p, const SigmaParam& sp) {
  return apf_gap_gradient(y_prev - y_k, p, sp);
}

Vec apf_grad_predecessor(const Eigen::Ref<const Vec>& y_k, const Eigen::Ref<const Vec>& y_prev,
                         const ApfParams& p, const SigmaParam& sp) {
  return -apf_grad_follower(y_k, y_prev, p, sp);
}

double eta_c(double c, const ApfParams& p, const SigmaParam& sp) {
  if (!std::isfinite(c) || c <= 0.0) {
    throw std::invalid_argument("eta_c: potential level c must be a positive finite real");
  }
  const double delta = p.delta_sigma();
  double lo = std::max(1e-14, std::numeric_limits<double>::min());
  double hi = delta;
  if (apf_value(lo, p) <= c) {
    throw std::invalid_argument("eta_c: level c exceeds the barrier at the bracket edge");
  }
  // V is strictly decreasing on (0, delta], so bisection on V(s) - c converges.
  // Iterate to ULP adjacency; a handful of extra iterations cost nothing
  // for a once-per-run computation.
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (apf_value(mid, p) > c) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return euclid_from_sigma(0.5 * (lo + hi), sp);
}

ApfSelfTest run_apf_self_test(const ApfFamily& family) {
  ApfSelfTest result;
  const double delta = family.min_location();

  // Axiom (i): the potential blows up toward contact.
  const double near_contact = family.value(1e-12);
  const double reference = std::max(family.value(0.5 * delta), std::numeric_limits<double>::min());
  result.barrier_diverges = std::isfinite(near_contact) ? near_contact > 1e8 * reference
                                                        : near_contact > 0.0;

  // Axiom (ii): exactly one sign change of the derivative, - to +, at delta.
  const double lo0 = 1e-9 * delta;
  const double hi0 = 4.0 * delta;
  constexpr int kGrid = 2048;
  int sign_changes = 0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  double prev_s = lo0;
  double prev_d = family.deriv(lo0);
  for (int i = 1; i <= kGrid; ++i) {
    const double s = lo0 * std::pow(hi0 / lo0, static_cast<double>(i) / kGrid);
    const double d = family.deriv(s);
    if (prev_d < 0.0 && d >= 0.0) {
      ++sign_changes;
      bracket_lo = prev_s;
      bracket_hi = s;
    } else if (prev_d > 0.0 && d <= 0.0) {
      sign_changes += 2;  // wrong-direction change disqualifies
    }
    prev_s = s;
    prev_d = d;
  }
  if (sign_changes == 1) {
    double lo = bracket_lo, hi = bracket_hi;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (family.deriv(mid) < 0.0 ? lo : hi) = mid;
    }
    const double root = 0.5 * (lo + hi);
    result.min_location_error = std::abs(root - delta);
    const double min_scale = std::max(1.0, std::abs(family.value(2.0 * delta)));
    result.unique_minimum =
        result.min_location_error <= 1e-9 * std::max(1.0, delta) &&
        std::abs(family.value(delta)) <= 1e-12 * min_scale;
  }
  return result;
}

}  // namespace platoon
