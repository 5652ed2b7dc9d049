/**
 * @file kinematics.hpp
 * @brief D-H model and closed-form kinematics of the 4-DOF palletizing arm.
 *
 * Link angles follow the palletizing (absolute-angle) convention: theta2,
 * theta3 and theta4 are measured from the horizontal, not accumulated along
 * the chain. A parallelogram keeps link a4 horizontal at all times.
 *
 * Units: millimetres for lengths, radians for angles. Degrees appear only at
 * the configuration/CLI boundary.
 *
 * All functions are pure and safe to call concurrently.
 */

#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace firebot::kinematics {

/// One row of the D-H table. joint is the variable index 1..4, or 0 for a
/// row whose theta is fixed at zero.
struct DHRow {
  double a = 0.0;      // mm
  double alpha = 0.0;  // rad
  double d = 0.0;      // mm
  int joint = 0;

  bool operator==(const DHRow&) const = default;
};

/// Coord1..Coord5 of the palletizing manipulator.
struct DHTable {
  std::array<DHRow, 5> rows;

  static DHTable defaults();
  void validate() const;  // throws std::invalid_argument

  double a(int i) const { return rows.at(i - 1).a; }  // 1-based like the table
  double d(int i) const { return rows.at(i - 1).d; }

  bool operator==(const DHTable&) const = default;
};

struct JointAngles {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double theta3 = 0.0;
  double theta4 = 0.0;

  Eigen::Vector4d vector() const { return {theta1, theta2, theta3, theta4}; }
  static JointAngles from(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
  bool operator==(const JointAngles&) const = default;
};

/// Operation ranges plus the admissible angle between links 2 and 3.
struct JointLimits {
  std::array<double, 4> lower{};
  std::array<double, 4> upper{};
  double interior_min = 0.0;
  double interior_max = 0.0;

  static JointLimits defaults();
  bool operator==(const JointLimits&) const = default;
};

struct ToolOffset {
  double y5p = 0.0;  // mm along the Coord5 y-axis
  bool operator==(const ToolOffset&) const = default;
};

struct EndEffectorPose {
  double x = 0.0;    // mm
  double y = 0.0;    // mm
  double z = 0.0;    // mm
  double phi = 0.0;  // rad, nozzle pitch below horizontal (theta4 = -phi)

  double radius() const;
};

/// Link constants and joint limits of one arm.
struct Manipulator {
  DHTable table = DHTable::defaults();
  JointLimits limits = JointLimits::defaults();

  bool operator==(const Manipulator&) const = default;
};

class KinematicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No elbow configuration reaches the target.
class UnreachableError : public KinematicsError {
 public:
  using KinematicsError::KinematicsError;
};

/// A geometric solution exists but violates the operation ranges.
class JointLimitError : public KinematicsError {
 public:
  using KinematicsError::KinematicsError;
};

enum class LimitCheck { enforce, bypass };

/// Angle formed at the elbow by links 2 and 3.
double interior_angle(const JointAngles& q);

/// Empty string when q is admissible, otherwise a description of the first
/// violated limit.
std::string limit_violation(const JointAngles& q, const JointLimits& limits);
bool within_limits(const JointAngles& q, const JointLimits& limits);

/// Standard D-H transform Rot_z(theta) * Trans_z(d) * Trans_x(a) * Rot_x(alpha).
Eigen::Matrix4d dh_transform(const DHRow& row, double theta);

/// T_5^0 built by chaining dh_transform over the table. The absolute link
/// angles are mapped to the relative D-H joint angles the chain needs.
Eigen::Matrix4d chain_transform(const DHTable& table, const JointAngles& q);

EndEffectorPose forward_kinematics(const Manipulator& arm, const JointAngles& q,
                                   const ToolOffset& tool,
                                   LimitCheck check = LimitCheck::enforce);

/// Closed-form solution with the fixed elbow branch (+acos for theta2,
/// -acos for theta3). Throws UnreachableError or JointLimitError.
JointAngles inverse_kinematics(const Manipulator& arm, const EndEffectorPose& pose,
                               const ToolOffset& tool);

// ---------------------------------------------------------------------------
// Workspace analysis
// ---------------------------------------------------------------------------

struct NamedPoint {
  std::string name;
  EndEffectorPose pose;
};

struct PointCheck {
  std::string name;
  bool reachable = false;
  std::string reason;  // empty when reachable
};

struct WorkspaceOptions {
  double joint_step = 0.0;    // rad, grid step for theta2/theta3
  double azimuth_step = 0.0;  // rad, theta1 step of the 3D cloud
  double wrist_angle = 0.0;   // theta4 used for the cloud and boundary
  ToolOffset tool;
  std::vector<NamedPoint> check_points;
};

enum class BoundaryCurve { upper, lower, inner, outer };
const char* to_string(BoundaryCurve c);

struct BoundarySample {
  BoundaryCurve curve;
  double r = 0.0;  // mm
  double z = 0.0;  // mm
};

struct WorkspaceSummary {
  double r_min = 0.0;  // two-link chord a2/a3, mm
  double r_max = 0.0;
  double chain_r_min = 0.0;  // planar radius of the tool point over the grid
  double chain_r_max = 0.0;
  std::size_t grid_samples = 0;
  std::vector<BoundarySample> boundary;
  std::vector<Eigen::Vector3d> cloud;  // mm
  std::vector<PointCheck> checks;
};

/// Two-link chord length for a given elbow interior angle (law of cosines).
double chord_length(double a2, double a3, double interior);

WorkspaceSummary workspace_analysis(const Manipulator& arm, const WorkspaceOptions& options);

}  // namespace firebot::kinematics
