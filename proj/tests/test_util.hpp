// Helpers shared by the unit tests and the acceptance binary.
#ifndef SMOOTHRL_TESTS_TEST_UTIL_HPP_
#define SMOOTHRL_TESTS_TEST_UTIL_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "smoothrl/kinematics.hpp"
#include "smoothrl/smoothness.hpp"

namespace smoothrl::testing {

// ||a - b|| / max(||b||, floor)
inline double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                      double floor = 1e-12) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max(std::abs(b), floor);
}

// Two-link arm with unit links and wide limits.
inline ManipulatorModel unit_two_link() {
  return ManipulatorModel({1.0, 1.0}, {{-4.0, 4.0}, {-4.0, 4.0}});
}

inline VecX uniform_vec(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  VecX v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

// Joint path q(t) = a + b * s(t / T) per joint with random endpoints; its
// exact derivatives come from the quintic profile.
struct QuinticJointPath {
  VecX start, delta;
  double duration = 1.0;

  VecX q(double t) const { return start + delta * min_jerk_profile(t / duration); }
  VecX qd(double t) const {
    return delta * min_jerk_profile_d1(t / duration) / duration;
  }
  VecX qdd(double t) const {
    return delta * min_jerk_profile_d2(t / duration) / (duration * duration);
  }
  VecX qddd(double t) const {
    return delta * min_jerk_profile_d3(t / duration) / std::pow(duration, 3);
  }
  JointTrajectory sample(double dt) const {
    const long n = std::lround(duration / dt);
    std::vector<VecX> s;
    for (long i = 0; i <= n; ++i) s.push_back(q(i * dt));
    return JointTrajectory(dt, s);
  }
};

inline QuinticJointPath random_quintic(std::mt19937_64& rng, int dof, double duration) {
  return QuinticJointPath{uniform_vec(rng, dof, -1.5, 1.5), uniform_vec(rng, dof, -1.0, 1.0),
                          duration};
}

// Central difference of a vector function along one coordinate.
inline Eigen::MatrixXd central_fd(const std::function<Eigen::MatrixXd(double)>& f, double h) {
  return (f(h) - f(-h)) / (2.0 * h);
}

}  // namespace smoothrl::testing

#endif  // SMOOTHRL_TESTS_TEST_UTIL_HPP_
