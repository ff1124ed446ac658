#include "smoothrl/smoothness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "smoothrl/errors.hpp"

namespace smoothrl {

void SmoothnessReport::write_csv_row(std::ostream& os) const {
  const auto old = os.precision(17);
  os << mean_jerk_norm << ',' << peak_jerk_norm << ',' << mean_sq_jerk << ','
     << horizon;
  os.precision(old);
}

SmoothnessReport average_jerk(const std::vector<Vec2>& jerks) {
  if (jerks.empty()) throw EmptyTrajectory();
  SmoothnessReport r;
  double sum = 0.0, sum_sq = 0.0, peak = 0.0;
  for (const Vec2& j : jerks) {
    if (!j.allFinite()) throw ContractViolation("non-finite jerk sample");
    const double n = j.norm();
    sum += n;
    sum_sq += j.squaredNorm();
    peak = std::max(peak, n);
  }
  const double t = static_cast<double>(jerks.size());
  r.mean_jerk_norm = sum / t;
  r.peak_jerk_norm = peak;
  r.mean_sq_jerk = sum_sq / t;
  r.horizon = static_cast<int>(jerks.size());
  return r;
}

SmoothnessReport trajectory_smoothness(const ManipulatorModel& model,
                                       const JointTrajectory& traj,
                                       const EeKinematicsOptions& options) {
  const auto ee = ee_kinematics(model, estimate_joint_derivatives(traj), options);
  std::vector<Vec2> jerks;
  jerks.reserve(ee.size());
  for (const auto& e : ee) jerks.push_back(e.jerk);
  return average_jerk(jerks);
}

double min_jerk_profile(double tau) {
  const double t3 = tau * tau * tau;
  return t3 * (10.0 - 15.0 * tau + 6.0 * tau * tau);
}

double min_jerk_profile_d1(double tau) {
  return 30.0 * tau * tau * (1.0 - tau) * (1.0 - tau);
}

double min_jerk_profile_d2(double tau) {
  return 60.0 * tau * (1.0 - tau) * (1.0 - 2.0 * tau);
}

double min_jerk_profile_d3(double tau) {
  return 60.0 - 360.0 * tau + 360.0 * tau * tau;
}

Vec2 min_jerk_position(const MinJerkSegment& seg, double t) {
  if (!(seg.duration > 0.0)) throw ContractViolation("duration must be > 0");
  if (!(t >= 0.0 && t <= seg.duration)) {
    throw ContractViolation("time outside [0, duration]");
  }
  if (t == seg.duration) return seg.end;
  return seg.start + (seg.end - seg.start) * min_jerk_profile(t / seg.duration);
}

JointTrajectory sample_min_jerk_joint_traj(const ManipulatorModel& model,
                                           const VecX& q_start,
                                           const VecX& q_goal,
                                           double duration, double dt) {
  if (q_start.size() != model.dof() || q_goal.size() != model.dof()) {
    throw ContractViolation("endpoint dimension does not match model dof");
  }
  if (!(dt > 0.0) || !(duration >= 2.0 * dt)) {
    throw ContractViolation("need duration >= 2 dt > 0");
  }
  if (!model.within_limits(q_start)) {
    throw InfeasibleDemonstration("start configuration violates joint limits");
  }
  if (!model.within_limits(q_goal)) {
    throw InfeasibleDemonstration("goal configuration violates joint limits");
  }
  const long steps = std::lround(duration / dt);
  std::vector<VecX> samples;
  samples.reserve(steps + 1);
  const VecX delta = q_goal - q_start;
  for (long i = 0; i <= steps; ++i) {
    if (i == steps) {
      samples.push_back(q_goal);
    } else {
      const double s = min_jerk_profile(static_cast<double>(i) / steps);
      samples.push_back(q_start + s * delta);
    }
  }
  return JointTrajectory(dt, std::move(samples));
}

}  // namespace smoothrl
