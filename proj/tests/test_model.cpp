#include <cmath>
#include <numbers>

#include "doctest.h"
#include "liesde/model.hpp"
#include "test_util.hpp"

using namespace liesde;
using testutil::diff_norm;
using testutil::random_skew;

TEST_CASE("SO(3) test model coefficients") {
  const LieSDEModel m = make_so3_test_model();
  const auto g = son_generators(3);
  CHECK(m.dim == 3);
  CHECK(m.side == MultiplySide::Left);
  CHECK_FALSE(m.state_dependent);

  const SquareMatrix q = SquareMatrix::identity(3);
  CHECK(diff_norm(m.V(0.0, q), g[0] + g[2]) < 1e-15);  // f1(0)=1, f2(0)=0, f3(0)=1

  const double t = std::numbers::pi / 2.0;
  const double f3 = 1.0 + t + t * t + t * t * t;
  CHECK(diff_norm(m.V(t, q), g[1] + f3 * g[2]) < 1e-14);

  for (double tt : {0.0, 0.5, 1.0}) {
    const SquareMatrix k = m.K(tt, q);
    const SquareMatrix v = m.V(tt, q);
    CHECK(diff_norm(k + k.transpose(), v * v) < 1e-12);
    CHECK(frobenius_norm(v + v.transpose()) < 1e-14);
  }
}

TEST_CASE("rigid_body_V closed forms") {
  CHECK(frobenius_norm(rigid_body_V({0, 0, 0}, {2.0, 1.0, 2.0 / 3.0})) == 0.0);

  const SquareMatrix v = rigid_body_V({0, 0, 1}, {1.0, 1.0, 2.0 / 3.0});
  CHECK(v(0, 1) == doctest::Approx(1.5));
  CHECK(v(1, 0) == doctest::Approx(-1.5));
  CHECK(v(0, 2) == 0.0);
  CHECK(v(1, 2) == 0.0);
  CHECK(v(2, 0) == 0.0);
  CHECK(v(2, 1) == 0.0);

  NormalStream stream(301, 0);
  for (int rep = 0; rep < 10; ++rep) {
    const std::array<double, 3> y{stream.next(), stream.next(), stream.next()};
    const SquareMatrix vv = rigid_body_V(y, {2.0, 1.0, 2.0 / 3.0});
    CHECK(frobenius_norm(vv + vv.transpose()) == 0.0);
  }
  CHECK_THROWS_AS(rigid_body_V({1, 0, 0}, {0.0, 1.0, 1.0}), InvalidInertia);
}

TEST_CASE("rigid body model construction and invariants") {
  const std::array<double, 3> inertia{2.0, 1.0, 2.0 / 3.0};
  const std::array<double, 3> y0{std::sin(1.1), 0.0, std::cos(1.1)};
  const LieSDEModel m = make_rigid_body_model(inertia, y0);
  CHECK(m.side == MultiplySide::Right);
  CHECK(m.state_dependent);
  CHECK(m.group.kind == GroupKind::UnitSphereCarrier);

  // At Q = I the coefficient equals the direct evaluation at y0.
  const SquareMatrix q = SquareMatrix::identity(3);
  CHECK(diff_norm(m.V(0.0, q), rigid_body_V(y0, inertia)) == 0.0);

  NormalStream stream(302, 0);
  for (int rep = 0; rep < 10; ++rep) {
    const SquareMatrix rot = psi_apply(Parametrization::cayley(), random_skew(3, stream));
    const SquareMatrix k = m.K(0.0, rot);
    const SquareMatrix v = m.V(0.0, rot);
    CHECK(diff_norm(k + k.transpose(), v * v) < 1e-13);
  }

  CHECK_THROWS_AS(make_rigid_body_model(inertia, {1.0, 1.0, 0.0}), InvalidInitial);
  CHECK_THROWS_AS(make_rigid_body_model({1.0, -1.0, 1.0}, y0), InvalidInertia);
}

TEST_CASE("SO(2) correlation model has zero algebra drift") {
  const LieSDEModel m = make_so2_correlation_model(0.4);
  const SquareMatrix q = SquareMatrix::identity(2);
  const SquareMatrix v = m.V(0.0, q);
  const SquareMatrix k = m.K(0.0, q);
  CHECK(diff_norm(k + k.transpose(), v * v) < 1e-15);
  // K - V^2/2 = 0 for this model: the flow is a pure random rotation.
  SquareMatrix drift_input = k;
  drift_input.add_scaled(-0.5, v * v);
  CHECK(frobenius_norm(drift_input) < 1e-16);
}

TEST_CASE("algebra coefficients at the anchor") {
  const LieSDEModel m = make_so3_test_model();
  const SquareMatrix q = SquareMatrix::identity(3);
  const double t = 0.3;
  const SquareMatrix k = m.K(t, q);
  const SquareMatrix v = m.V(t, q);
  SquareMatrix ka = k;
  ka.add_scaled(-0.5, v * v);

  const AlgebraCoefficients exp_c(m, Parametrization::exponential(1), t, q);
  CHECK(diff_norm(exp_c.drift0(), ka) < 1e-15);
  CHECK(diff_norm(exp_c.diffusion0(), v) < 1e-15);
  CHECK(diff_norm(exp_c.drift(SquareMatrix(3)), ka) < 1e-15);

  const AlgebraCoefficients cay_c(m, Parametrization::cayley(), t, q);
  CHECK(diff_norm(cay_c.drift0(), 0.5 * ka) < 1e-15);
  CHECK(diff_norm(cay_c.diffusion0(), 0.5 * v) < 1e-15);
}

TEST_CASE("algebra coefficients of the zero model vanish everywhere") {
  LieSDEModel zero;
  zero.dim = 3;
  zero.side = MultiplySide::Left;
  zero.group = GroupDescriptor::so_n(3);
  zero.label = "zero";
  zero.K = [](double, const SquareMatrix&) { return SquareMatrix(3); };
  zero.V = [](double, const SquareMatrix&) { return SquareMatrix(3); };

  NormalStream stream(303, 0);
  for (const auto& p : {Parametrization::exponential(2), Parametrization::cayley()}) {
    const AlgebraCoefficients c(zero, p, 0.0, SquareMatrix::identity(3));
    CHECK(frobenius_norm(c.drift0()) == 0.0);
    CHECK(frobenius_norm(c.diffusion0()) == 0.0);
    const SquareMatrix omega = random_skew(3, stream, 0.3);
    CHECK(frobenius_norm(c.drift(omega)) == 0.0);
    CHECK(frobenius_norm(c.diffusion(omega)) == 0.0);
  }
}

TEST_CASE("right-multiply coefficients flip the operator index sign") {
  const std::array<double, 3> inertia{2.0, 1.0, 2.0 / 3.0};
  const std::array<double, 3> y0{std::sin(1.1), 0.0, std::cos(1.1)};
  const LieSDEModel m = make_rigid_body_model(inertia, y0);
  const SquareMatrix q = SquareMatrix::identity(3);

  const AlgebraCoefficients c(m, Parametrization::exponential(1), 0.0, q);
  NormalStream stream(304, 0);
  const SquareMatrix omega = random_skew(3, stream, 0.2);
  // Gamma(Omega) = dpsi^{-1}_{+Omega}(V(psi(Omega) Q)); check against the
  // explicit expression with the sign flipped.
  const SquareMatrix state = psi_apply(Parametrization::exponential(1), omega) * q;
  const SquareMatrix expected = dexp_inv_trunc(-omega, m.V(0.0, state), 1);
  CHECK(diff_norm(c.diffusion(omega), expected) < 1e-15);
}

TEST_CASE("model lookup by name") {
  CHECK(make_model_by_name("so3-test").label == "so3-test");
  CHECK(make_model_by_name("rigid-body").label == "rigid-body");
  CHECK(make_model_by_name("so2-corr", 0.5).label == "so2-corr");
  CHECK_THROWS_AS(make_model_by_name("nope"), ConfigError);
}
