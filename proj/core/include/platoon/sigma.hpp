#pragma once

#include "platoon/common.hpp"

namespace platoon {

/// Scaling constant of the sigma-norm, ||x||_s = (sqrt(1 + |x|^2) - 1) / sigma.
class SigmaParam {
 public:
  explicit SigmaParam(double sigma);
  double sigma() const noexcept { return sigma_; }

 private:
  double sigma_;
};

/// Smooth surrogate norm: nonnegative, zero iff x = 0, differentiable everywhere.
double sigma_norm(const Eigen::Ref<const Vec>& x, const SigmaParam& p);

/// Scalar convenience overload (the d = 1 roadway case).
double sigma_norm(double x, const SigmaParam& p);

/// Same map applied to an already-computed squared Euclidean norm.
double sigma_norm_from_squared(double squared_norm, const SigmaParam& p);

/// Gradient x / (sigma * sqrt(1 + |x|^2)); Euclidean norm strictly below 1/sigma.
Vec sigma_norm_grad(const Eigen::Ref<const Vec>& x, const SigmaParam& p);

/// Inverse map: Euclidean length whose sigma-norm is s.
double euclid_from_sigma(double s, const SigmaParam& p);

}  // namespace platoon
