#pragma once

#include "platoon/common.hpp"
#include "platoon/sigma.hpp"

#include <string_view>

namespace platoon {

/// Parameters of the barrier potential family V(s) = a * (s - delta)^2 / s,
/// where s is a gap measured in sigma-norm units. V blows up at contact
/// (s -> 0+), has its unique zero minimum at s = delta, and grows unboundedly.
class ApfParams {
 public:
  ApfParams(double amplitude, double delta_sigma);
  double amplitude() const noexcept { return amplitude_; }
  double delta_sigma() const noexcept { return delta_sigma_; }

 private:
  double amplitude_;
  double delta_sigma_;
};

/// Potential value at sigma-norm gap s > 0.
double apf_value(double s, const ApfParams& p);

/// dV/ds = a * (s - delta) * (s + delta) / s^2; negative on (0, delta),
/// zero at delta, positive beyond.
double apf_deriv(double s, const ApfParams& p);

/// Gradient of V(||y_k - y_prev||_sigma) with respect to the follower
/// position y_k. Gap convention: z = y_prev - y_k.
Vec apf_grad_follower(const Eigen::Ref<const Vec>& y_k, const Eigen::Ref<const Vec>& y_prev,
                      const ApfParams& p, const SigmaParam& sp);

/// Gradient with respect to the predecessor position; exactly the negation
/// of apf_grad_follower (anti-symmetry).
Vec apf_grad_predecessor(const Eigen::Ref<const Vec>& y_k, const Eigen::Ref<const Vec>& y_prev,
                         const ApfParams& p, const SigmaParam& sp);

/// Follower gradient expressed directly in the gap z = y_prev - y_k.
Vec apf_gap_gradient(const Eigen::Ref<const Vec>& z, const ApfParams& p, const SigmaParam& sp);

/// Guaranteed minimum Euclidean gap implied by the potential level c > 0:
/// the Euclidean length of the smaller root of V(s) = c on (0, delta),
/// found by bisection. Any configuration with V below c keeps its gap
/// strictly above the returned value.
double eta_c(double c, const ApfParams& p, const SigmaParam& sp);

/// Pluggable potential contract: value + derivative over sigma-norm gaps.
/// Alternative families must pass run_apf_self_test on registration; the
/// closed-loop guarantees only need the axioms, not this particular family.
class ApfFamily {
 public:
  virtual ~ApfFamily() = default;
  virtual double value(double s) const = 0;
  virtual double deriv(double s) const = 0;
  /// Location of the unique minimum, in sigma-norm units.
  virtual double min_location() const = 0;
  virtual std::string_view name() const = 0;
};

class RationalBarrierApf final : public ApfFamily {
 public:
  explicit RationalBarrierApf(ApfParams params) : params_(params) {}
  double value(double s) const override { return apf_value(s, params_); }
  double deriv(double s) const override { return apf_deriv(s, params_); }
  double min_location() const override { return params_.delta_sigma(); }
  std::string_view name() const override { return "rational_barrier"; }
  const ApfParams& params() const noexcept { return params_; }

 private:
  ApfParams params_;
};

struct ApfSelfTest {
  bool barrier_diverges = false;   // value blows up toward contact
  bool unique_minimum = false;     // single - to + derivative sign change
  double min_location_error = 0.0; // bisected zero of deriv vs min_location()
  bool pass() const { return barrier_diverges && unique_minimum; }
};

/// Numerical check of the two potential axioms; run once when a family is
/// registered with a scenario.
ApfSelfTest run_apf_self_test(const ApfFamily& family);

}  // namespace platoon
