#pragma once

#include "platoon/common.hpp"

#include <functional>
#include <random>

namespace platoon::testutil {

inline constexpr std::uint64_t kSeed = 0x7a57ed5eedull;

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Central-difference gradient of a scalar field, componentwise.
inline Vec central_grad(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
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

inline double rel_err(double got, double want) {
  const double scale = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / scale;
}

struct Rng {
  std::mt19937_64 engine{kSeed};
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine);
  }
  Vec vec(Eigen::Index dim, double lo, double hi) {
    Vec v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = uniform(lo, hi);
    return v;
  }
};

}  // namespace platoon::testutil
