#pragma once

#include "firebot/chassis_control.hpp"
#include "firebot/dynamics.hpp"
#include "firebot/kinematics.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace firebot::arm {

using dynamics::Vec4;

struct ArmGains {
  double lambda = 20.0;
  std::array<double, 4> K{5.0, 5.0, 5.0, 5.0};
  double boundary_layer = 0.01;  // 0 selects the pure sign function

  void validate() const;  // throws std::invalid_argument
  bool operator==(const ArmGains&) const = default;
};

/// Where the arm base sits on the chassis, in the chassis body frame (m).
/// y is to the left of the heading, z is the height of the turret base.
struct ArmMount {
  double x = 0.0;
  double y = -0.6;
  double z = 0.3;

  bool operator==(const ArmMount&) const = default;
};

/// Global-frame nozzle target, metres and radians.
struct GlobalTarget {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double pitch = 0.0;
};

struct ArmReferenceSample {
  Vec4 q = Vec4::Zero();
  Vec4 qd = Vec4::Zero();
  Vec4 qdd = Vec4::Zero();
};

struct ArmReference {
  double dt = 0.0;
  std::vector<ArmReferenceSample> samples;
};

/// Raised by build_arm_reference; index is the offending sample.
class ReferenceUnreachable : public kinematics::UnreachableError {
 public:
  ReferenceUnreachable(std::size_t index, const std::string& what);
  std::size_t index;
};

class ReferenceLimitViolation : public kinematics::JointLimitError {
 public:
  ReferenceLimitViolation(std::size_t index, const std::string& what);
  std::size_t index;
};

/// Global point expressed in the turret base frame, in mm.
Eigen::Vector3d to_base_frame(const chassis::ChassisState& chassis, const ArmMount& mount,
                              const Eigen::Vector3d& global_m);

/// Tool point in the global frame (m) for joint angles q on a chassis pose.
Eigen::Vector3d tool_position(const kinematics::Manipulator& arm, const kinematics::ToolOffset& tool,
                              const ArmMount& mount, const chassis::ChassisState& chassis, const Vec4& q);

/// Joint target for one global nozzle target seen from a chassis pose.
kinematics::JointAngles solve_target(const kinematics::Manipulator& arm, const kinematics::ToolOffset& tool,
                                     const ArmMount& mount, const chassis::ChassisState& chassis,
                                     const GlobalTarget& target);

/// Joint positions for each grid sample. theta1 is unwrapped against the
/// previous sample so the series stays continuous.
std::vector<Vec4> solve_series(const kinematics::Manipulator& arm, const kinematics::ToolOffset& tool,
                               const ArmMount& mount, const std::vector<chassis::ChassisState>& chassis,
                               const std::vector<GlobalTarget>& targets, std::size_t index_offset = 0);

/// Central differences inside, one-sided second-order differences at the ends.
ArmReference differentiate(const std::vector<Vec4>& q, double dt);

ArmReference build_arm_reference(const kinematics::Manipulator& arm, const kinematics::ToolOffset& tool,
                                 const ArmMount& mount, const std::vector<chassis::ChassisState>& chassis,
                                 const std::vector<GlobalTarget>& targets, double dt);

/// s = e' + lambda e.
Vec4 sliding_surface(const Vec4& e, const Vec4& edot, const ArmGains& gains);

struct ArmControl {
  Vec4 torque = Vec4::Zero();
  Vec4 e = Vec4::Zero();
  Vec4 edot = Vec4::Zero();
  Vec4 s = Vec4::Zero();
};

/// u = M (q_R'' + lambda e' + K sat(s / eps)) + G + C q'.
ArmControl arm_control_law(const dynamics::ArmModel& model, const Vec4& q, const Vec4& qd,
                           const ArmReferenceSample& ref, const ArmGains& gains);

/// Quintic joint-space segment matching position, velocity and acceleration
/// at both ends.
class QuinticSegment {
 public:
  QuinticSegment(const ArmReferenceSample& from, const ArmReferenceSample& to, double duration);
  ArmReferenceSample at(double tau) const;  // tau clamped to [0, duration]
  double duration() const { return duration_; }

 private:
  std::array<Vec4, 6> c_;
  double duration_;
};

}  // namespace firebot::arm
