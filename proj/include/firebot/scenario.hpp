#pragma once

// Scenario configuration. The file is JSON; every key is optional and falls
// back to the defaults below. Arm constants are in mm, chassis and planner
// quantities in m, all angles in degrees. Angles are kept in degrees here so
// that load -> save -> load is exact; conversion happens when the module
// inputs are built.

#include "firebot/arm_control.hpp"
#include "firebot/chassis_control.hpp"
#include "firebot/dynamics.hpp"
#include "firebot/kinematics.hpp"
#include "firebot/mission_planner.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace firebot::scenario {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Carries the dotted key path of the offending value.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string key, const std::string& what);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct DHRowConfig {
  double a_mm = 0.0;
  double alpha_deg = 0.0;
  double d_mm = 0.0;
  int joint = 0;
  bool operator==(const DHRowConfig&) const = default;
};

struct ArmConfig {
  std::array<DHRowConfig, 5> dh{{{100.0, 90.0, 185.0, 1},
                                 {1000.0, 0.0, 0.0, 2},
                                 {1700.0, 0.0, 0.0, 3},
                                 {100.0, 0.0, 0.0, 0},
                                 {80.0, 0.0, 0.0, 4}}};
  std::array<double, 4> lower_deg{-180.0, 0.0, -120.0, -90.0};
  std::array<double, 4> upper_deg{180.0, 135.0, 15.5, 0.0};
  double interior_min_deg = 30.0;
  double interior_max_deg = 165.0;
  double tool_y5p_mm = 0.0;
  arm::ArmMount mount;
  arm::ArmGains gains;
  bool operator==(const ArmConfig&) const = default;
};

struct InertiaConfig {
  double total_mass_kg = 400.0;
  double payload_kg = 20.0;
  std::optional<std::array<dynamics::LinkParams, 4>> links;  // overrides the rod model
  double gravity = kGravity;
  std::array<double, 4> viscous{};
  bool operator==(const InertiaConfig&) const = default;
};

/// Chassis start pose relative to the reference at t = 0, in the reference
/// body frame.
struct InitialOffset {
  double along_m = 0.0;
  double lateral_m = 0.0;
  double heading_deg = 0.0;
  bool operator==(const InitialOffset&) const = default;
};

struct ChassisConfig {
  chassis::ChassisGains gains;
  double track_width_m = 0.8;
  InitialOffset initial_offset;
  bool operator==(const ChassisConfig&) const = default;
};

struct SweepConfig {
  double vertical_span_m = 0.5384;
  double horizontal_span_m = 1.2;
  int passes = 3;
  double speed_mps = 1.4;
  double center_height_m = 1.0;
  double pitch_deg = 30.0;
  double corner_blend_s = 0.15;
  bool operator==(const SweepConfig&) const = default;
};

struct StageTwoConfig {
  double spray_pitch_deg = 30.0;
  double min_transition_s = 0.3;
  double min_dwell_s = 0.1;
  bool operator==(const StageTwoConfig&) const = default;
};

struct TopSprayConfig {
  double duration_s = 0.0;
  double theta2_deg = 135.0;
  double theta3_deg = 15.5;
  double theta4_deg = -45.0;
  bool operator==(const TopSprayConfig&) const = default;
};

struct WorkspacePoint {
  std::string name;
  double x_mm = 0.0, y_mm = 0.0, z_mm = 0.0, phi_deg = 0.0;
  bool operator==(const WorkspacePoint&) const = default;
};

struct WorkspaceConfig {
  double joint_step_deg = 1.0;
  double azimuth_step_deg = 30.0;  // 0 skips the point cloud
  double wrist_deg = 0.0;
  std::vector<WorkspacePoint> points;
  bool operator==(const WorkspaceConfig&) const = default;
};

struct DisturbanceConfig {
  chassis::DisturbanceKind kind = chassis::DisturbanceKind::none;
  std::array<double, 2> amplitude{};
  double frequency_hz = 1.0;
  bool operator==(const DisturbanceConfig&) const = default;
};

struct ScenarioConfig {
  double dt = 1e-3;
  chassis::Integrator integrator = chassis::Integrator::rk4;
  std::uint64_t seed = 1;
  mission::FireTestSpec fire_test;
  mission::CircuitSpec circuit;
  SweepConfig sweep;
  StageTwoConfig stage2;
  TopSprayConfig top_spray;
  std::vector<mission::FireSpot> fires = default_fires();
  ArmConfig arm;
  InertiaConfig inertia;
  ChassisConfig chassis;
  DisturbanceConfig disturbance;
  WorkspaceConfig workspace;

  static std::vector<mission::FireSpot> default_fires();

  /// Throws ValidationError naming the first bad key.
  void validate() const;
  bool operator==(const ScenarioConfig&) const = default;
};

ScenarioConfig parse_scenario(const std::string& text);  // empty text gives the defaults
ScenarioConfig load_scenario(const std::string& path);
std::string serialize(const ScenarioConfig& config);  // pretty JSON
void save_scenario(const ScenarioConfig& config, const std::string& path);

kinematics::Manipulator manipulator(const ScenarioConfig& config);
kinematics::ToolOffset tool(const ScenarioConfig& config);
dynamics::ArmModel arm_model(const ScenarioConfig& config);
mission::MissionInputs mission_inputs(const ScenarioConfig& config);
chassis::DisturbanceSpec disturbance(const ScenarioConfig& config);
kinematics::WorkspaceOptions workspace_options(const ScenarioConfig& config);
kinematics::JointAngles top_spray_joints(const ScenarioConfig& config);

}  // namespace firebot::scenario
