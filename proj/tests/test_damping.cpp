#include "doctest.h"

#include <cmath>
#include <random>

#include "dampcert/damping.hpp"
#include "dampcert/errors.hpp"
#include "test_util.hpp"

using namespace dampcert;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Matrix finite_difference_jacobian(const DampingSpec& spec, const Vector& s) {
  const InnerProduct u = InnerProduct::identity(s.size());
  Matrix J(s.size(), s.size());
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(s[j]));
    Vector p = s, m = s;
    p[j] += h;
    m[j] -= h;
    J.col(j) = (apply(spec, p, u) - apply(spec, m, u)) / (2.0 * h);
  }
  return J;
}

}  // namespace

TEST_CASE("componentwise saturations") {
  const Vector s = vec({-3.0, -0.5, 0.0, 0.25, 7.0});
  const Vector c = apply(DampingSpec::clamp(1.0), s);
  CHECK(c[0] == -1.0);
  CHECK(c[1] == -0.5);
  CHECK(c[2] == 0.0);
  CHECK(c[4] == 1.0);
  const Vector t = apply(DampingSpec::tanh(2.0), s);
  CHECK(t[0] == doctest::Approx(2.0 * std::tanh(-1.5)));
  CHECK(t[3] == doctest::Approx(2.0 * std::tanh(0.125)));
  const Vector a = apply(DampingSpec::arctan(1.0), s);
  CHECK(a[4] == doctest::Approx(std::atan(7.0)));
  CHECK(DampingSpec::arctan(2.0).bound() == doctest::Approx(M_PI));
  CHECK(DampingSpec::clamp(3.0).bound() == 3.0);
  CHECK(std::isinf(DampingSpec::linear(1.0).bound()));
}

TEST_CASE("norm saturation scales onto the sphere") {
  const Vector s = vec({3.0, 4.0});
  const Vector out = apply(DampingSpec::norm_saturation(1.0), s);
  CHECK(out[0] == doctest::Approx(0.6));
  CHECK(out[1] == doctest::Approx(0.8));
  const Vector small = vec({0.3, 0.4});
  CHECK((apply(DampingSpec::norm_saturation(1.0), small) - small).norm() == 0.0);
  // With a weighted U norm the threshold follows that norm.
  const InnerProduct u = InnerProduct::scaled(2, 4.0);  // ||s||_U = 2 |s|
  const Vector w = apply(DampingSpec::norm_saturation(1.0), small, u);
  CHECK(u.norm(w) == doctest::Approx(1.0));
}

TEST_CASE("linear and weak damping") {
  const Vector s = vec({-4.0, 0.0, 9.0});
  CHECK((apply(DampingSpec::linear(2.5), s) - 2.5 * s).norm() == 0.0);
  const Vector w = apply(DampingSpec::weak(2.0, 0.5), s);
  CHECK(w[0] == doctest::Approx(-4.0));
  CHECK(w[1] == 0.0);
  CHECK(w[2] == doctest::Approx(6.0));
}

TEST_CASE("catalogue constants") {
  const auto lin = DampingSpec::linear(3.0);
  CHECK(lin.C1 == 3.0);
  const auto sat = DampingSpec::clamp(2.0);
  CHECK(sat.C1 == 1.0);
  CHECK(sat.C2 == doctest::Approx(0.5));
  const auto weak = DampingSpec::weak(1.5, 0.25);
  CHECK(weak.C1 == 1.5);
  CHECK(weak.h.form() == HFunction::Form::power);
  CHECK(weak.h.exponent() == doctest::Approx(-0.75));
  CHECK(weak.componentwise());
  CHECK_FALSE(DampingSpec::norm_saturation(1.0).componentwise());
}

TEST_CASE("spec validation") {
  auto spec = DampingSpec::clamp(1.0);
  spec.level = 0.0;
  CHECK_THROWS_AS(validate(spec), Error);
  auto weak = DampingSpec::weak(1.0, 0.5);
  weak.exponent = 1.5;
  CHECK_THROWS_AS(validate(weak), Error);
}

TEST_CASE("h functions") {
  const auto c = HFunction::constant(2.0);
  CHECK(c(0.0) == 2.0);
  CHECK(c(1e9) == 2.0);
  const auto p = HFunction::power(-0.5);
  CHECK(p(4.0) == doctest::Approx(0.5));
  CHECK(p.singular_at_zero());
  CHECK_FALSE(p.nondecreasing());
  try {
    p(0.0);
    FAIL("expected DomainError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DomainError);
  }
  CHECK_THROWS_AS(c(-1.0), Error);
  const auto t = HFunction::table({{0.0, 1.0}, {1.0, 3.0}, {2.0, 3.0}});
  CHECK(t(0.5) == doctest::Approx(2.0));
  CHECK(t(10.0) == 3.0);
  CHECK(t.nondecreasing());
}

TEST_CASE("analytic Jacobians match finite differences") {
  std::mt19937_64 rng(21);
  for (const auto& spec :
       {DampingSpec::tanh(1.5), DampingSpec::arctan(0.7), DampingSpec::norm_saturation(1.0),
        DampingSpec::linear(2.0), DampingSpec::weak(1.0, 0.5)}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Vector s = 2.0 * testutil::random_vector(rng, 3);
      const Matrix J = jacobian(spec, s, InnerProduct::identity(3));
      const Matrix fd = finite_difference_jacobian(spec, s);
      CHECK((J - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("monotonicity holds on random pairs") {
  std::mt19937_64 rng(4);
  for (const auto& spec : {DampingSpec::clamp(1.0), DampingSpec::tanh(1.0),
                           DampingSpec::arctan(1.0), DampingSpec::norm_saturation(1.0),
                           DampingSpec::weak(1.0, 0.5)}) {
    for (int trial = 0; trial < 500; ++trial) {
      const Vector a = 5.0 * testutil::random_vector(rng, 4);
      const Vector b = 5.0 * testutil::random_vector(rng, 4);
      CHECK((apply(spec, a) - apply(spec, b)).dot(a - b) >= -1e-12);
    }
  }
}

TEST_CASE("verify_definition accepts the saturation catalogue") {
  for (const auto& spec :
       {DampingSpec::linear(1.0), DampingSpec::clamp(1.0), DampingSpec::tanh(2.0),
        DampingSpec::arctan(1.0), DampingSpec::norm_saturation(1.0)}) {
    for (int dim : {1, 4}) {
      const auto report = verify_definition(spec, dim, 2000, 9);
      INFO(report.render_text());
      CHECK(report.find("monotonicity")->margin >= -1e-12);
      CHECK(report.find("inf_sat")->margin >= -1e-12);
      CHECK(report.all_pass());
      CHECK_FALSE(report.h_singular_at_zero);
    }
  }
}

TEST_CASE("verify_definition detects an undersized sector constant") {
  auto spec = DampingSpec::clamp(1.0);
  spec.C2 = 0.1;  // the tight value is 1/level = 1
  const auto report = verify_definition(spec, 3, 2000, 2);
  CHECK_FALSE(report.find("inf_sat")->pass);
  CHECK(report.find("monotonicity")->pass);
}

TEST_CASE("weak damping flags the singular h") {
  const auto report = verify_definition(DampingSpec::weak(1.0, 0.5), 1, 1000, 3);
  CHECK(report.h_singular_at_zero);
  CHECK(report.inf_sat_floor > 0.0);
  CHECK_FALSE(report.find("h_at_zero")->pass);
  CHECK_FALSE(report.find("h_nondecreasing")->pass);
  REQUIRE(report.find("h_power_law") != nullptr);
  CHECK(report.find("h_power_law")->pass);
  CHECK(report.find("monotonicity")->pass);
}

TEST_CASE("verify_definition is deterministic for a seed") {
  const auto a = verify_definition(DampingSpec::tanh(1.0), 4, 500, 17);
  const auto b = verify_definition(DampingSpec::tanh(1.0), 4, 500, 17);
  CHECK(a.render_text() == b.render_text());
  CHECK_THROWS_AS(verify_definition(DampingSpec::tanh(1.0), 0, 500, 1), Error);
  CHECK_THROWS_AS(verify_definition(DampingSpec::tanh(1.0), 2, 10, 1), Error);
}

TEST_CASE("damping kind names round-trip") {
  for (auto kind : {DampingKind::linear, DampingKind::norm_saturation, DampingKind::clamp,
                    DampingKind::tanh, DampingKind::arctan, DampingKind::weak}) {
    CHECK(parse_damping_kind(to_string(kind)) == kind);
  }
  CHECK_FALSE(parse_damping_kind("sigmoid").has_value());
}
