#ifndef SMOOTHRL_SMOOTHNESS_HPP_
#define SMOOTHRL_SMOOTHNESS_HPP_

#include <ostream>
#include <string>
#include <vector>

#include "smoothrl/kinematics.hpp"

namespace smoothrl {

struct SmoothnessReport {
  double mean_jerk_norm = 0.0;  // (1/T) sum ||jerk_t||_2, m/s^3
  double peak_jerk_norm = 0.0;
  double mean_sq_jerk = 0.0;
  int horizon = 0;  // T, number of jerk samples

  static std::string csv_header() {
    return "mean_jerk,peak_jerk,mean_sq_jerk,horizon";
  }
  void write_csv_row(std::ostream& os) const;
};

// Average Euclidean jerk over every sample, boundary samples included.
SmoothnessReport average_jerk(const std::vector<Vec2>& jerks);

// Full chain: joint differences -> end-effector jerk -> report.
SmoothnessReport trajectory_smoothness(const ManipulatorModel& model,
                                       const JointTrajectory& traj,
                                       const EeKinematicsOptions& options = {});

// Rest-to-rest quintic s(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5 and its first
// three derivatives with respect to tau.
double min_jerk_profile(double tau);
double min_jerk_profile_d1(double tau);
double min_jerk_profile_d2(double tau);
double min_jerk_profile_d3(double tau);

struct MinJerkSegment {
  Vec2 start = Vec2::Zero();
  Vec2 end = Vec2::Zero();
  double duration = 1.0;
};

Vec2 min_jerk_position(const MinJerkSegment& seg, double t);

// Per-joint quintic from q_start to q_goal. The sample count is
// round(duration / dt) + 1, so the last sample is exactly q_goal.
JointTrajectory sample_min_jerk_joint_traj(const ManipulatorModel& model,
                                           const VecX& q_start,
                                           const VecX& q_goal,
                                           double duration, double dt);

}  // namespace smoothrl

#endif  // SMOOTHRL_SMOOTHNESS_HPP_
