#include "smoothrl/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smoothrl/errors.hpp"
#include "smoothrl/finite_difference.hpp"

namespace smoothrl {

double JointLimit::clamp(double q) const { return std::clamp(q, lower, upper); }

ManipulatorModel::ManipulatorModel(std::vector<double> link_lengths,
                                   std::vector<JointLimit> joint_limits)
    : link_lengths_(std::move(link_lengths)),
      joint_limits_(std::move(joint_limits)) {
  if (link_lengths_.empty()) throw ContractViolation("model needs >= 1 link");
  if (link_lengths_.size() != joint_limits_.size()) {
    throw ContractViolation("link_lengths and joint_limits differ in length");
  }
  for (double l : link_lengths_) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw ContractViolation("link lengths must be positive and finite");
    }
  }
  for (const JointLimit& lim : joint_limits_) {
    if (!(lim.lower <= lim.upper)) {
      throw ContractViolation("joint limit interval is empty");
    }
  }
}

double ManipulatorModel::reach() const {
  double r = 0.0;
  for (double l : link_lengths_) r += l;
  return r;
}

bool ManipulatorModel::within_limits(const VecX& q) const {
  if (q.size() != dof()) return false;
  for (int i = 0; i < dof(); ++i) {
    if (!joint_limits_[i].contains(q[i])) return false;
  }
  return true;
}

VecX ManipulatorModel::clamp_to_limits(const VecX& q) const {
  VecX out(q.size());
  for (int i = 0; i < dof(); ++i) out[i] = joint_limits_[i].clamp(q[i]);
  return out;
}

VecX ManipulatorModel::home() const {
  VecX q(dof());
  for (int i = 0; i < dof(); ++i) q[i] = joint_limits_[i].mid();
  return q;
}

JointTrajectory::JointTrajectory(double dt, std::vector<VecX> samples)
    : dt_(dt), samples_(std::move(samples)) {
  if (!(dt_ > 0.0)) throw ContractViolation("trajectory dt must be positive");
  if (samples_.size() < 2) {
    throw ContractViolation("trajectory needs at least 2 samples");
  }
  const auto n = samples_.front().size();
  for (const VecX& s : samples_) {
    if (s.size() != n || n == 0) {
      throw ContractViolation("trajectory samples differ in dimension");
    }
  }
}

namespace {

void check_dim(const ManipulatorModel& model, const VecX& v, const char* name) {
  if (v.size() != model.dof()) {
    throw ContractViolation(std::string(name) + " has length " +
                            std::to_string(v.size()) + ", model dof is " +
                            std::to_string(model.dof()));
  }
}

// Cumulative link angles and their first two time derivatives.
struct LinkAngles {
  VecX phi, phi_dot, phi_ddot;
};

LinkAngles cumulative(const VecX& q, const VecX* q_dot, const VecX* q_ddot) {
  const auto n = q.size();
  LinkAngles a{VecX(n), VecX::Zero(n), VecX::Zero(n)};
  double p = 0.0, pd = 0.0, pdd = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    p += q[i];
    a.phi[i] = p;
    if (q_dot) {
      pd += (*q_dot)[i];
      a.phi_dot[i] = pd;
    }
    if (q_ddot) {
      pdd += (*q_ddot)[i];
      a.phi_ddot[i] = pdd;
    }
  }
  return a;
}

// Column i of each map is the suffix sum over links k >= i of a per-link
// term, so build the per-link terms and accumulate from the tip.
Mat2X suffix_sum(const Mat2X& per_link) {
  Mat2X out(2, per_link.cols());
  Vec2 acc = Vec2::Zero();
  for (Eigen::Index k = per_link.cols() - 1; k >= 0; --k) {
    acc += per_link.col(k);
    out.col(k) = acc;
  }
  return out;
}

}  // namespace

Vec2 forward_kinematics(const ManipulatorModel& model, const VecX& q) {
  check_dim(model, q, "q");
  Vec2 p = Vec2::Zero();
  double phi = 0.0;
  for (int i = 0; i < model.dof(); ++i) {
    phi += q[i];
    p += model.link_lengths()[i] * Vec2(std::cos(phi), std::sin(phi));
  }
  return p;
}

Mat2X jacobian(const ManipulatorModel& model, const VecX& q) {
  check_dim(model, q, "q");
  const LinkAngles a = cumulative(q, nullptr, nullptr);
  Mat2X terms(2, model.dof());
  for (int k = 0; k < model.dof(); ++k) {
    const double l = model.link_lengths()[k];
    terms.col(k) << -l * std::sin(a.phi[k]), l * std::cos(a.phi[k]);
  }
  return suffix_sum(terms);
}

Mat2X jacobian_dot(const ManipulatorModel& model, const VecX& q,
                   const VecX& q_dot) {
  check_dim(model, q, "q");
  check_dim(model, q_dot, "q_dot");
  const LinkAngles a = cumulative(q, &q_dot, nullptr);
  Mat2X terms(2, model.dof());
  for (int k = 0; k < model.dof(); ++k) {
    const double l = model.link_lengths()[k];
    const double c = std::cos(a.phi[k]), s = std::sin(a.phi[k]);
    terms.col(k) << -l * c * a.phi_dot[k], -l * s * a.phi_dot[k];
  }
  return suffix_sum(terms);
}

Mat2X jacobian_ddot(const ManipulatorModel& model, const VecX& q,
                    const VecX& q_dot, const VecX& q_ddot) {
  check_dim(model, q, "q");
  check_dim(model, q_dot, "q_dot");
  check_dim(model, q_ddot, "q_ddot");
  const LinkAngles a = cumulative(q, &q_dot, &q_ddot);
  Mat2X terms(2, model.dof());
  for (int k = 0; k < model.dof(); ++k) {
    const double l = model.link_lengths()[k];
    const double c = std::cos(a.phi[k]), s = std::sin(a.phi[k]);
    const double w = a.phi_dot[k], wd = a.phi_ddot[k];
    terms.col(k) << l * (s * w * w - c * wd), -l * (c * w * w + s * wd);
  }
  return suffix_sum(terms);
}

std::vector<JointState> estimate_joint_derivatives(const JointTrajectory& traj) {
  if (traj.size() < fd::min_samples(3)) {
    throw TrajectoryTooShort(std::to_string(traj.size()) +
                             " samples, jerk estimation needs " +
                             std::to_string(fd::min_samples(3)));
  }
  const auto& q = traj.samples();
  const auto v = fd::differentiate(q, traj.dt(), 1);
  const auto acc = fd::differentiate(q, traj.dt(), 2);
  const auto jerk = fd::differentiate(q, traj.dt(), 3);
  std::vector<JointState> out;
  out.reserve(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    out.push_back(JointState{q[i], v[i], acc[i], jerk[i]});
  }
  return out;
}

std::vector<EeKinematicState> ee_kinematics(
    const ManipulatorModel& model, const std::vector<JointState>& states,
    const EeKinematicsOptions& options) {
  if (states.empty()) throw ContractViolation("no joint states");
  std::vector<EeKinematicState> out;
  out.reserve(states.size());
  for (const JointState& s : states) {
    check_dim(model, s.q, "q");
    check_dim(model, s.q_dot, "q_dot");
    check_dim(model, s.q_ddot, "q_ddot");
    check_dim(model, s.q_dddot, "q_dddot");

    const Mat2X j = jacobian(model, s.q);
    Mat2X jd, jdd;
    if (options.mode == JacobianDerivativeMode::kAnalytic) {
      jd = jacobian_dot(model, s.q, s.q_dot);
      jdd = jacobian_ddot(model, s.q, s.q_dot, s.q_ddot);
    } else {
      // J along q(t) = q + t qd + t^2/2 qdd, differenced at t = +-h.
      const double h = options.fd_step;
      const VecX fwd = s.q + h * s.q_dot + 0.5 * h * h * s.q_ddot;
      const VecX bwd = s.q - h * s.q_dot + 0.5 * h * h * s.q_ddot;
      const Mat2X jf = jacobian(model, fwd), jb = jacobian(model, bwd);
      jd = (jf - jb) / (2.0 * h);
      jdd = (jf - 2.0 * j + jb) / (h * h);
    }

    EeKinematicState e;
    e.position = forward_kinematics(model, s.q);
    e.velocity = j * s.q_dot;
    e.acceleration = jd * s.q_dot + j * s.q_ddot;
    e.jerk = jdd * s.q_dot + 2.0 * jd * s.q_ddot + j * s.q_dddot;
    if (!e.position.allFinite() || !e.velocity.allFinite() ||
        !e.acceleration.allFinite() || !e.jerk.allFinite()) {
      throw NumericalFailure("non-finite end-effector kinematics");
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace smoothrl
