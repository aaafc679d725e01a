#include "platoon/sigma.hpp"

#include <cmath>

namespace platoon {

SigmaParam::SigmaParam(double sigma) : sigma_(sigma) {
  if (!std::isfinite(sigma) || sigma <= 0.0) {
    throw std::invalid_argument("SigmaParam: sigma must be a positive finite real");
  }
}

// (sqrt(1+q) - 1) evaluated as q / (sqrt(1+q) + 1): identical algebraically,
// but keeps strict positivity for tiny nonzero q instead of cancelling to 0.
double sigma_norm_from_squared(double squared_norm, const SigmaParam& p) {
  if (!std::isfinite(squared_norm) || squared_norm < 0.0) {
    throw std::invalid_argument("sigma_norm_from_squared: need a nonnegative finite input");
  }
  return squared_norm / (p.sigma() * (std::sqrt(1.0 + squared_norm) + 1.0));
}

double sigma_norm(const Eigen::Ref<const Vec>& x, const SigmaParam& p) {
  if (!x.allFinite()) {
    throw std::invalid_argument("sigma_norm: non-finite input");
  }
  return sigma_norm_from_squared(x.squaredNorm(), p);
}

double sigma_norm(double x, const SigmaParam& p) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument("sigma_norm: non-finite input");
  }
  return sigma_norm_from_squared(x * x, p);
}

Vec sigma_norm_grad(const Eigen::Ref<const Vec>& x, const SigmaParam& p) {
  if (!x.allFinite()) {
    throw std::invalid_argument("sigma_norm_grad: non-finite input");
  }
  const double denom = p.sigma() * std::sqrt(1.0 + x.squaredNorm());
  return x / denom;
}

double euclid_from_sigma(double s, const SigmaParam& p) {
  if (!std::isfinite(s) || s < 0.0) {
    throw std::invalid_argument("euclid_from_sigma: s must be a nonnegative finite real");
  }
  // (sigma*s + 1)^2 - 1 expanded as sigma*s * (sigma*s + 2) to avoid cancellation.
  const double t = p.sigma() * s;
  return std::sqrt(t * (t + 2.0));
}

}  // namespace platoon
