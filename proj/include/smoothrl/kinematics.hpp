#ifndef SMOOTHRL_KINEMATICS_HPP_
#define SMOOTHRL_KINEMATICS_HPP_

#include <Eigen/Dense>

#include <vector>

namespace smoothrl {

using Vec2 = Eigen::Vector2d;
using VecX = Eigen::VectorXd;
using Mat2X = Eigen::Matrix<double, 2, Eigen::Dynamic>;

struct JointLimit {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double q) const { return q >= lower && q <= upper; }
  double clamp(double q) const;
  double mid() const { return 0.5 * (lower + upper); }
};

// Planar serial arm with revolute joints. Link i is rotated by the sum of
// joint angles 0..i relative to the base x axis.
class ManipulatorModel {
 public:
  ManipulatorModel(std::vector<double> link_lengths,
                   std::vector<JointLimit> joint_limits);

  int dof() const { return static_cast<int>(link_lengths_.size()); }
  const std::vector<double>& link_lengths() const { return link_lengths_; }
  const std::vector<JointLimit>& joint_limits() const { return joint_limits_; }
  double reach() const;

  bool within_limits(const VecX& q) const;
  VecX clamp_to_limits(const VecX& q) const;
  // Midpoint of every joint interval.
  VecX home() const;

 private:
  std::vector<double> link_lengths_;
  std::vector<JointLimit> joint_limits_;
};

struct JointState {
  VecX q;
  VecX q_dot;
  VecX q_ddot;
  VecX q_dddot;
};

// Uniformly sampled joint positions.
class JointTrajectory {
 public:
  JointTrajectory(double dt, std::vector<VecX> samples);

  double dt() const { return dt_; }
  int size() const { return static_cast<int>(samples_.size()); }
  int dof() const { return static_cast<int>(samples_.front().size()); }
  const std::vector<VecX>& samples() const { return samples_; }
  const VecX& operator[](int i) const { return samples_[i]; }

 private:
  double dt_;
  std::vector<VecX> samples_;
};

struct EeKinematicState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Vec2 acceleration = Vec2::Zero();
  Vec2 jerk = Vec2::Zero();
};

Vec2 forward_kinematics(const ManipulatorModel& model, const VecX& q);

// 2 x dof positional Jacobian.
Mat2X jacobian(const ManipulatorModel& model, const VecX& q);

// dJ/dt along a path passing through q with velocity q_dot.
Mat2X jacobian_dot(const ManipulatorModel& model, const VecX& q,
                   const VecX& q_dot);

// d^2J/dt^2 along a path through q with velocity q_dot and acceleration
// q_ddot. Expands the chain rule fully, so the result depends on q_ddot.
Mat2X jacobian_ddot(const ManipulatorModel& model, const VecX& q,
                    const VecX& q_dot, const VecX& q_ddot);

// How the Jacobian time derivatives are obtained in ee_kinematics.
enum class JacobianDerivativeMode {
  kAnalytic,
  // Differences of the analytic Jacobian along the local quadratic joint
  // path; usable for arms without closed-form derivatives.
  kFiniteDifference,
};

struct EeKinematicsOptions {
  JacobianDerivativeMode mode = JacobianDerivativeMode::kAnalytic;
  double fd_step = 1e-4;
};

// Joint velocity, acceleration and jerk at every sample. Second order central
// stencils in the interior, one-sided second order stencils at both ends.
// Needs at least 5 samples.
std::vector<JointState> estimate_joint_derivatives(const JointTrajectory& traj);

// V = J qd, A = Jd qd + J qdd, Jerk = Jdd qd + 2 Jd qdd + J qddd.
std::vector<EeKinematicState> ee_kinematics(
    const ManipulatorModel& model, const std::vector<JointState>& states,
    const EeKinematicsOptions& options = {});

}  // namespace smoothrl

#endif  // SMOOTHRL_KINEMATICS_HPP_
