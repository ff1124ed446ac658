#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "smoothrl/errors.hpp"
#include "smoothrl/finite_difference.hpp"
#include "smoothrl/kinematics.hpp"
#include "test_util.hpp"

using namespace smoothrl;
using smoothrl::testing::rel_err;
using smoothrl::testing::unit_two_link;
using smoothrl::testing::uniform_vec;

namespace {

constexpr double kPi = std::numbers::pi;

VecX v2(double a, double b) {
  VecX v(2);
  v << a, b;
  return v;
}

Mat2X m22(double a, double b, double c, double d) {
  Mat2X m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("ManipulatorModel rejects broken invariants") {
  CHECK_THROWS_AS(ManipulatorModel({}, {}), ContractViolation);
  CHECK_THROWS_AS(ManipulatorModel({1.0, -1.0}, {{0, 1}, {0, 1}}), ContractViolation);
  CHECK_THROWS_AS(ManipulatorModel({1.0}, {{1, 0}}), ContractViolation);
  CHECK_THROWS_AS(ManipulatorModel({1.0, 1.0}, {{0, 1}}), ContractViolation);
  const ManipulatorModel m({0.5, 0.5}, {{-1, 1}, {0, 2}});
  CHECK(m.dof() == 2);
  CHECK(m.reach() == doctest::Approx(1.0));
  CHECK(m.home().isApprox(v2(0.0, 1.0)));
  CHECK(m.clamp_to_limits(v2(5.0, -5.0)) == v2(1.0, 0.0));
  CHECK(m.within_limits(v2(1.0, 0.0)));
  CHECK_FALSE(m.within_limits(v2(1.0001, 0.0)));
}

TEST_CASE("JointTrajectory invariants") {
  CHECK_THROWS_AS(JointTrajectory(0.1, {v2(0, 0)}), ContractViolation);
  CHECK_THROWS_AS(JointTrajectory(0.0, {v2(0, 0), v2(0, 0)}), ContractViolation);
  CHECK_THROWS_AS(JointTrajectory(0.1, {v2(0, 0), VecX::Zero(3)}), ContractViolation);
}

TEST_CASE("forward kinematics examples") {
  const auto m = unit_two_link();
  CHECK(forward_kinematics(m, v2(0, 0)).isApprox(Vec2(2, 0)));
  CHECK((forward_kinematics(m, v2(kPi / 2, 0)) - Vec2(0, 2)).norm() < 1e-12);
  CHECK((forward_kinematics(m, v2(kPi / 2, -kPi / 2)) - Vec2(1, 1)).norm() < 1e-12);
  CHECK_THROWS_AS(forward_kinematics(m, VecX::Zero(3)), ContractViolation);
}

TEST_CASE("jacobian examples and FD-of-FK oracle") {
  const auto m = unit_two_link();
  CHECK((jacobian(m, v2(0, 0)) - m22(0, 0, 2, 1)).norm() < 1e-12);
  CHECK((jacobian(m, v2(kPi / 2, 0)) - m22(-2, -1, 0, 0)).norm() < 1e-12);
  CHECK_THROWS_AS(jacobian(m, VecX::Zero(1)), ContractViolation);

  std::mt19937_64 rng(11);
  const ManipulatorModel arm3({0.7, 0.4, 0.3}, {{-4, 4}, {-4, 4}, {-4, 4}});
  for (const ManipulatorModel* model : {&m, &arm3}) {
    for (int trial = 0; trial < 50; ++trial) {
      const VecX q = uniform_vec(rng, model->dof(), -kPi, kPi);
      Mat2X fd(2, model->dof());
      const double h = 1e-5;
      for (int i = 0; i < model->dof(); ++i) {
        VecX qp = q, qm = q;
        qp[i] += h;
        qm[i] -= h;
        fd.col(i) = (forward_kinematics(*model, qp) - forward_kinematics(*model, qm)) / (2 * h);
      }
      CHECK(rel_err(jacobian(*model, q), fd) < 1e-6);
    }
  }
}

TEST_CASE("jacobian_dot examples and FD oracle") {
  const auto m = unit_two_link();
  CHECK((jacobian_dot(m, v2(0, 0), v2(1, 0)) - m22(-2, -1, 0, 0)).norm() < 1e-12);
  CHECK(jacobian_dot(m, v2(0.3, -0.2), v2(0, 0)).norm() == 0.0);
  CHECK_THROWS_AS(jacobian_dot(m, v2(0, 0), VecX::Zero(3)), ContractViolation);

  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const VecX q = uniform_vec(rng, 2, -kPi, kPi);
    const VecX qd = uniform_vec(rng, 2, -2, 2);
    const double h = 1e-5;
    const Mat2X fd = (jacobian(m, q + h * qd) - jacobian(m, q - h * qd)) / (2 * h);
    CHECK(rel_err(jacobian_dot(m, q, qd), fd) < 1e-5);
  }
}

TEST_CASE("jacobian_ddot examples and FD oracle along a quadratic path") {
  const auto m = unit_two_link();
  CHECK((jacobian_ddot(m, v2(0, 0), v2(1, 0), v2(0, 0)) - m22(0, 0, -2, -1)).norm() < 1e-12);
  CHECK(jacobian_ddot(m, v2(0.4, 1.0), v2(0, 0), v2(0, 0)).norm() == 0.0);
  CHECK_THROWS_AS(jacobian_ddot(m, v2(0, 0), v2(0, 0), VecX::Zero(1)), ContractViolation);

  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const VecX q = uniform_vec(rng, 2, -kPi, kPi);
    const VecX qd = uniform_vec(rng, 2, -2, 2);
    const VecX qdd = uniform_vec(rng, 2, -2, 2);
    const double h = 1e-3;
    auto path = [&](double t) -> VecX { return q + t * qd + 0.5 * t * t * qdd; };
    const Mat2X fd =
        (jacobian(m, path(h)) - 2.0 * jacobian(m, path(0)) + jacobian(m, path(-h))) / (h * h);
    CHECK(rel_err(jacobian_ddot(m, q, qd, qdd), fd) < 1e-4);
  }
}

TEST_CASE("stencil weights reproduce known formulas") {
  const double nodes[] = {-1, 0, 1};
  const auto w = fd::stencil_weights(2, nodes, 0.0);
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(-2.0));
  CHECK(w[2] == doctest::Approx(1.0));
  const double five[] = {-2, -1, 0, 1, 2};
  const auto w3 = fd::stencil_weights(3, five, 0.0);
  const double want[] = {-0.5, 1.0, 0.0, -1.0, 0.5};
  for (int i = 0; i < 5; ++i) CHECK(w3[i] == doctest::Approx(want[i]).epsilon(1e-12));
  CHECK(fd::min_samples(3) == 5);
}

TEST_CASE("joint derivative estimates are exact on low-degree polynomials") {
  const double dt = 0.01;
  const int n = 30;
  auto series = [&](auto f) {
    std::vector<VecX> s;
    for (int i = 0; i < n; ++i) s.push_back(VecX::Constant(1, f(i * dt)));
    return JointTrajectory(dt, s);
  };

  SUBCASE("constant") {
    for (const auto& st : estimate_joint_derivatives(series([](double) { return 0.7; }))) {
      CHECK(std::abs(st.q_dot[0]) < 1e-9);
      CHECK(std::abs(st.q_ddot[0]) < 1e-9);
      CHECK(std::abs(st.q_dddot[0]) < 1e-9);
    }
  }
  SUBCASE("t^2 gives qdd = 2 at every sample") {
    const auto states = estimate_joint_derivatives(series([](double t) { return t * t; }));
    CHECK(states.size() == static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      CHECK(states[i].q_dot[0] == doctest::Approx(2 * i * dt).epsilon(1e-9));
      CHECK(std::abs(states[i].q_ddot[0] - 2.0) < 1e-8);
      CHECK(std::abs(states[i].q_dddot[0]) < 1e-5);
    }
  }
  SUBCASE("t^3 gives qddd = 6 at every sample") {
    const auto states = estimate_joint_derivatives(series([](double t) { return t * t * t; }));
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(states[i].q_ddot[0] - 6 * i * dt) < 1e-8);
      CHECK(std::abs(states[i].q_dddot[0] - 6.0) < 1e-5);
    }
  }
  SUBCASE("boundary stencils match the interior on t^4") {
    const auto states =
        estimate_joint_derivatives(series([](double t) { return t * t * t * t; }));
    for (int i = 0; i < n; ++i) CHECK(std::abs(states[i].q_dddot[0] - 24 * i * dt) < 1e-4);
  }
  SUBCASE("too short") {
    std::vector<VecX> s(4, VecX::Zero(1));
    CHECK_THROWS_AS(estimate_joint_derivatives(JointTrajectory(dt, s)), TrajectoryTooShort);
  }
}

TEST_CASE("ee_kinematics: constant state and circular motion") {
  const auto m = unit_two_link();
  JointState rest{v2(0.3, 0.5), VecX::Zero(2), VecX::Zero(2), VecX::Zero(2)};
  const auto still = ee_kinematics(m, {rest});
  CHECK(still[0].velocity.norm() == 0.0);
  CHECK(still[0].acceleration.norm() == 0.0);
  CHECK(still[0].jerk.norm() == 0.0);

  const ManipulatorModel one({1.0}, {{-10, 10}});
  std::vector<JointState> states;
  for (double t = 0.0; t < 3.0; t += 0.25) {
    states.push_back({VecX::Constant(1, t), VecX::Constant(1, 1.0), VecX::Zero(1), VecX::Zero(1)});
  }
  for (const auto& e : ee_kinematics(one, states)) {
    CHECK(e.velocity.norm() == doctest::Approx(1.0));
    CHECK(e.acceleration.norm() == doctest::Approx(1.0));
    CHECK(e.jerk.norm() == doctest::Approx(1.0));
  }

  // Through the finite-difference pipeline.
  std::vector<VecX> samples;
  for (int i = 0; i <= 400; ++i) samples.push_back(VecX::Constant(1, i * 0.005));
  const auto fd_states = estimate_joint_derivatives(JointTrajectory(0.005, samples));
  for (const auto& e : ee_kinematics(one, fd_states)) {
    CHECK(std::abs(e.jerk.norm() - 1.0) < 1e-3);
  }
  CHECK_THROWS_AS(ee_kinematics(m, {}), ContractViolation);
  CHECK_THROWS_AS(ee_kinematics(one, {rest}), ContractViolation);
}

TEST_CASE("finite-difference Jacobian derivative mode agrees with the analytic one") {
  const auto m = unit_two_link();
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    JointState s{uniform_vec(rng, 2, -kPi, kPi), uniform_vec(rng, 2, -2, 2),
                 uniform_vec(rng, 2, -2, 2), uniform_vec(rng, 2, -2, 2)};
    const auto a = ee_kinematics(m, {s});
    const auto f = ee_kinematics(m, {s}, {JacobianDerivativeMode::kFiniteDifference, 1e-4});
    CHECK(rel_err(f[0].acceleration, a[0].acceleration) < 1e-6);
    CHECK(rel_err(f[0].jerk, a[0].jerk) < 1e-5);
  }
}

TEST_CASE("kinematic maps are pure") {
  const auto m = unit_two_link();
  const VecX q = v2(0.1, 0.2), qd = v2(0.3, -0.4), qdd = v2(1, 2);
  CHECK(jacobian_ddot(m, q, qd, qdd) == jacobian_ddot(m, q, qd, qdd));
  CHECK(forward_kinematics(m, q) == forward_kinematics(m, q));
}
