#include "platoon/apf.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace platoon;
using testutil::Rng;

namespace {
const SigmaParam kUnit(1.0);
}

TEST_CASE("apf_value hand values and domain") {
  const ApfParams p(1.0, 2.0);
  CHECK(apf_value(2.0, p) == 0.0);
  CHECK(apf_value(1.0, p) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(apf_value(4.0, p) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(apf_value(0.0, p), std::domain_error);
  CHECK_THROWS_AS(apf_value(-1.0, p), std::domain_error);
  CHECK_THROWS_AS(ApfParams(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ApfParams(1.0, -2.0), std::invalid_argument);
}

TEST_CASE("apf_deriv: stationary at the minimum, hand value, sign structure") {
  const ApfParams p(1.0, 2.0);
  CHECK(apf_deriv(2.0, p) == 0.0);
  CHECK(apf_deriv(1.0, p) == doctest::Approx(-3.0).epsilon(1e-15));
  CHECK(apf_deriv(0.5, p) < 0.0);
  CHECK(apf_deriv(3.0, p) > 0.0);
  CHECK_THROWS_AS(apf_deriv(0.0, p), std::domain_error);
}

TEST_CASE("apf_deriv matches central finite differences") {
  Rng rng;
  for (int i = 0; i < 1000; ++i) {
    const ApfParams p(rng.uniform(0.2, 5.0), rng.uniform(0.5, 5.0));
    const double s = rng.uniform(0.05, 20.0);
    const double numeric =
        testutil::central_diff([&p](double x) { return apf_value(x, p); }, s, 1e-5);
    REQUIRE(testutil::rel_err(apf_deriv(s, p), numeric) < 1e-6);
  }
}

TEST_CASE("apf_grad_follower: zero at the equilibrium gap, hand value") {
  // Pick the gap so its sigma-norm is bitwise equal to delta.
  Vec y_prev(1), y_k(1);
  y_prev << 0.0;
  y_k << -7.0;
  const double delta = sigma_norm(y_prev - y_k, kUnit);
  const ApfParams p(3.0, delta);
  CHECK(apf_grad_follower(y_k, y_prev, p, kUnit).norm() == 0.0);

  // a = 1, delta = 2, gap sqrt(3): sigma-norm 1, deriv -3, grad 3*sqrt(3)/2.
  const ApfParams q(1.0, 2.0);
  y_k << -std::sqrt(3.0);
  const Vec g = apf_grad_follower(y_k, y_prev, q, kUnit);
  CHECK(testutil::rel_err(g[0], 3.0 * std::sqrt(3.0) / 2.0) < 1e-12);
}

TEST_CASE("apf_grad_follower matches finite differences of the composed potential") {
  Rng rng;
  for (int i = 0; i < 1000; ++i) {
    const int d = 1 + i % 3;
    const ApfParams p(rng.uniform(0.2, 4.0), rng.uniform(0.5, 4.0));
    const SigmaParam sp(rng.uniform(0.4, 2.5));
    Vec y_prev = rng.vec(d, -10.0, 10.0);
    Vec y_k = rng.vec(d, -10.0, 10.0);
    if ((y_prev - y_k).norm() < 0.2) y_prev.array() += 0.5;
    const Vec analytic = apf_grad_follower(y_k, y_prev, p, sp);
    const Vec numeric = testutil::central_grad(
        [&](const Vec& pos) { return apf_value(sigma_norm(y_prev - pos, sp), p); }, y_k, 1e-5);
    REQUIRE((analytic - numeric).norm() <= 1e-6 * std::max(1e-9, analytic.norm()));
  }
}

TEST_CASE("gradient anti-symmetry is exact") {
  Rng rng;
  for (int i = 0; i < 1000; ++i) {
    const int d = 1 + i % 3;
    const ApfParams p(rng.uniform(0.2, 4.0), rng.uniform(0.5, 4.0));
    const SigmaParam sp(rng.uniform(0.4, 2.5));
    const Vec y_prev = rng.vec(d, -10.0, 10.0);
    Vec y_k = rng.vec(d, -10.0, 10.0);
    if ((y_prev - y_k).squaredNorm() == 0.0) y_k.array() += 1.0;
    const Vec sum = apf_grad_follower(y_k, y_prev, p, sp) +
                    apf_grad_predecessor(y_k, y_prev, p, sp);
    REQUIRE(sum.norm() == 0.0);
  }
  Vec zero(2);
  zero << 1.0, 2.0;
  CHECK_THROWS_AS(apf_grad_follower(zero, zero, ApfParams(1.0, 1.0), kUnit), CollisionError);
}

TEST_CASE("barrier blows up toward contact") {
  const ApfParams p(1.0, 1.0);
  CHECK(apf_value(1e-12, p) > 1e10);
}

TEST_CASE("self-test certifies the family and locates the minimum") {
  Rng rng;
  for (int i = 0; i < 20; ++i) {
    const RationalBarrierApf family(ApfParams(rng.uniform(0.2, 5.0), rng.uniform(0.3, 8.0)));
    const ApfSelfTest result = run_apf_self_test(family);
    REQUIRE(result.pass());
    REQUIRE(result.min_location_error <= 1e-10 * std::max(1.0, family.min_location()));
  }
}

TEST_CASE("eta_c: bisected root matches the closed-form smaller root") {
  // a = 1, delta = 2, c = 1: (s-2)^2/s = 1 <=> s^2 - 5s + 4 = 0, roots {1, 4}.
  const ApfParams p(1.0, 2.0);
  const double eta = eta_c(1.0, p, kUnit);
  CHECK(testutil::rel_err(eta, std::sqrt(3.0)) < 1e-9);  // euclid of s = 1

  Rng rng;
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(0.2, 5.0);
    const double delta = rng.uniform(0.5, 6.0);
    const double c = rng.uniform(1e-3, 50.0);
    const SigmaParam sp(rng.uniform(0.4, 2.0));
    const ApfParams params(a, delta);
    const double b = 2.0 * a * delta + c;
    const double s_minus = (b - std::sqrt(c * c + 4.0 * a * delta * c)) / (2.0 * a);
    const double got = eta_c(c, params, sp);
    REQUIRE(testutil::rel_err(got, euclid_from_sigma(s_minus, sp)) < 1e-9);
    // Round trip: the potential at the returned gap equals the level.
    Vec gap(1);
    gap << got;
    REQUIRE(std::abs(apf_value(sigma_norm(gap, sp), params) - c) < 1e-8 * std::max(1.0, c));
  }
}

TEST_CASE("eta_c is strictly decreasing in c and below the equilibrium gap") {
  const ApfParams p(2.0, 3.0);
  const SigmaParam sp(0.8);
  double prev = std::numeric_limits<double>::infinity();
  for (double c : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    const double eta = eta_c(c, p, sp);
    CHECK(eta < prev);
    CHECK(eta < euclid_from_sigma(p.delta_sigma(), sp));
    prev = eta;
  }
  CHECK_THROWS_AS(eta_c(0.0, p, sp), std::invalid_argument);
  CHECK_THROWS_AS(eta_c(-1.0, p, sp), std::invalid_argument);
}
