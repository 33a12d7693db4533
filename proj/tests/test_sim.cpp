#include "doctest.h"

#include <cmath>
#include <random>

#include "dampcert/errors.hpp"
#include "dampcert/sim.hpp"
#include "test_util.hpp"

using namespace dampcert;

namespace {

SemiDiscreteSystem scalar_system() {
  return make_finite_dim(Matrix::Zero(1, 1), Matrix::Identity(1, 1), 1.0);
}

SemiDiscreteSystem oscillator_system() {
  Matrix A(2, 2);
  A << 0.0, 1.0, -1.0, 0.0;
  Matrix B(2, 1);
  B << 0.0, 1.0;
  return make_finite_dim(A, B, 1.0);
}

double value_at(const Trajectory& tr, double t) {
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (std::abs(tr.times[k] - t) < 1e-9) return tr.norm_H[k];
  }
  FAIL("time not on the grid");
  return 0.0;
}

// Closed form of z' = -sat(z) from z0 = 5.
double saturated_scalar(double t) { return t <= 4.0 ? 5.0 - t : std::exp(-(t - 4.0)); }

}  // namespace

TEST_CASE("scalar saturated feedback follows the piecewise closed form") {
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 8.0;
  Vector z0(1);
  z0 << 5.0;
  const auto tr = integrate(scalar_system(), DampingSpec::clamp(1.0), z0, cfg);
  for (double t : {1.0, 2.5, 4.0, 6.0, 8.0}) {
    CHECK(value_at(tr, t) == doctest::Approx(saturated_scalar(t)).epsilon(1e-6));
  }
  REQUIRE(tr.t_star.has_value());
  CHECK(*tr.t_star == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("linear damping reproduces the exponential") {
  IntegratorConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 5.0;
  Vector z0(1);
  z0 << 2.0;
  const auto tr = integrate(scalar_system(), DampingSpec::linear(1.0), z0, cfg);
  CHECK(value_at(tr, 5.0) == doctest::Approx(2.0 * std::exp(-5.0)).epsilon(1e-6));
}

TEST_CASE("undamped wave conserves energy exactly") {
  const auto sys = discretize_wave(32, [](double) { return 0.0; }, 1.0);
  std::mt19937_64 rng(1);
  const Vector z0 = testutil::random_vector(rng, sys.dim());
  IntegratorConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 10.0;
  cfg.error_control = false;
  const auto tr = integrate(sys, DampingSpec::clamp(1.0), z0, cfg);
  for (double n : tr.norm_H) CHECK(std::abs(n - tr.norm_H[0]) <= 1e-10 * tr.norm_H[0]);
}

TEST_CASE("norm is nonincreasing under saturated damping") {
  const auto sys = discretize_kdv(2.0 * M_PI, 32, [](double) { return 1.0; }, 1.0);
  std::mt19937_64 rng(2);
  const Vector z0 = 10.0 * smooth_initial_state(sys, testutil::random_vector(rng, sys.dim()), 0.05);
  IntegratorConfig cfg;
  cfg.dt = 5e-3;
  cfg.t_end = 2.0;
  const auto tr = integrate(sys, DampingSpec::tanh(1.0), z0, cfg);
  for (std::size_t k = 1; k < tr.size(); ++k) {
    CHECK(tr.norm_H[k] <= tr.norm_H[k - 1] * (1.0 + 1e-12));
    CHECK(tr.damping_power[k] >= 0.0);
  }
}

TEST_CASE("fixed-step midpoint is second order") {
  const auto sys = oscillator_system();
  const auto damping = DampingSpec::tanh(1.0);
  Vector z0(2);
  z0 << 3.0, 0.0;
  auto final_state = [&](double dt) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.t_end = 2.0;
    cfg.error_control = false;
    return integrate(sys, damping, z0, cfg).states.back();
  };
  const Vector ref = final_state(1e-4);
  const double e1 = (final_state(0.02) - ref).norm();
  const double e2 = (final_state(0.01) - ref).norm();
  CHECK(e1 / e2 >= 3.5);
}

TEST_CASE("error control tightens the solution") {
  const auto sys = oscillator_system();
  Vector z0(2);
  z0 << 3.0, 0.0;
  IntegratorConfig coarse;
  coarse.dt = 0.1;
  coarse.t_end = 2.0;
  coarse.error_control = false;
  IntegratorConfig controlled = coarse;
  controlled.error_control = true;
  controlled.target = 1e-8;
  IntegratorConfig fine = coarse;
  fine.dt = 1e-4;
  const auto damping = DampingSpec::tanh(1.0);
  const Vector ref = integrate(sys, damping, z0, fine).states.back();
  const double e_coarse = (integrate(sys, damping, z0, coarse).states.back() - ref).norm();
  const double e_ctrl = (integrate(sys, damping, z0, controlled).states.back() - ref).norm();
  CHECK(e_ctrl < 0.05 * e_coarse);
}

TEST_CASE("step rejection limit") {
  IntegratorConfig cfg;
  cfg.dt = 1.0;
  cfg.t_end = 1.0;
  cfg.target = 1e-15;
  cfg.max_halvings = 1;
  Vector z0(2);
  z0 << 3.0, 0.0;
  try {
    integrate(oscillator_system(), DampingSpec::tanh(1.0), z0, cfg);
    FAIL("expected StepRejectionLimit");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StepRejectionLimit);
  }
}

TEST_CASE("weak damping integrates through the singular derivative") {
  Vector z0(1);
  z0 << 1.0;
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 3.0;
  const auto tr = integrate(scalar_system(), DampingSpec::weak(1.0, 0.5), z0, cfg);
  // z' = -sqrt(z) reaches zero at t = 2.
  CHECK(value_at(tr, 1.0) == doctest::Approx(0.25).epsilon(1e-4));
  CHECK(tr.norm_H.back() <= 1e-6);
}

TEST_CASE("integrator arguments are validated") {
  IntegratorConfig cfg;
  Vector wrong(3);
  wrong.setOnes();
  CHECK_THROWS_AS(integrate(oscillator_system(), DampingSpec::clamp(1.0), wrong, cfg), Error);
  cfg.dt = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("unit-ball entry") {
  Trajectory tr;
  tr.times = {0.0, 1.0, 2.0};
  tr.norm_H = {4.0, 2.0, 0.5};
  const auto t = detect_unit_ball_entry(tr);
  REQUIRE(t.has_value());
  CHECK(*t == doctest::Approx(1.5));
  tr.norm_H = {0.9, 0.5, 0.1};
  CHECK(*detect_unit_ball_entry(tr) == 0.0);
  tr.norm_H = {9.0, 5.0, 2.0};
  CHECK_FALSE(detect_unit_ball_entry(tr).has_value());
}

TEST_CASE("smoothing solves the resolvent equation") {
  const auto sys = discretize_kdv(3.0, 20, [](double) { return 1.0; }, 1.0);
  std::mt19937_64 rng(4);
  const Vector z0 = testutil::random_vector(rng, sys.dim());
  const Vector z = smooth_initial_state(sys, z0, 0.01);
  CHECK((z - 0.01 * sys.A() * z - z0).norm() <= 1e-10 * z0.norm());
  CHECK(sys.norm_H(z) <= sys.norm_H(z0) * (1.0 + 1e-12));
}
