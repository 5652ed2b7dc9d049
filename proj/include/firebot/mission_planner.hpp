#pragma once

// Mission geometry and sequencing: the chassis circuit (trajectory II), the
// per-face nozzle raster (trajectory I), residual-fire grouping and stop
// placement, command dispatch and the mission state machine.

#include "firebot/arm_control.hpp"
#include "firebot/chassis_control.hpp"
#include "firebot/kinematics.hpp"
#include "firebot/units.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace firebot::mission {

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InfeasibleSweep : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IllegalTransition : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct FireTestSpec {
  std::string test_class = "20A";
  double crib_side = 1.0;        // m, square footprint centred at the origin
  double discharge_time = 15.0;  // s
  double stage2_budget = 3.0;    // s

  void validate() const;
  bool operator==(const FireTestSpec&) const = default;
};

/// Square circuit run anti-clockwise. An edge is the path from K_i to
/// K_{i+1}: half a straight, one corner, half a straight.
struct CircuitSpec {
  double center_x = 0.0, center_y = 0.0;  // m
  double edge_length = 2.60128;           // m of path per edge
  double corner_radius = 0.4;             // m
  double min_corner_radius = 0.2;         // m
  // Path length over which curvature ramps in and out at each tangency
  // point. Zero gives plain arcs with a curvature step.
  double blend_length = 0.4;
  double speed = 0.88;  // m/s

  void validate() const;  // throws GeometryError
  bool operator==(const CircuitSpec&) const = default;
};

/// Nozzle raster over one crib face. The raster runs in the vertical plane
/// horizontal_span / 2 from the crib centre, passes alternate direction and
/// are joined by equal vertical steps.
struct SweepSpec {
  double vertical_span = 0.5384;  // m
  double horizontal_span = 1.2;   // m
  int passes = 3;
  double speed = 1.4;            // m/s
  double center_height = 1.0;    // m
  double pitch = deg2rad(30.0);  // nozzle pitch below horizontal
  double corner_blend = 0.15;    // s, velocity blend at each raster corner

  double face_length() const;  // path length of one face
  void validate() const;       // throws InfeasibleSweep
  bool operator==(const SweepSpec&) const = default;
};

struct StageTwoSpec {
  double spray_pitch = deg2rad(30.0);
  double min_transition = 0.3;  // s, shortest joint-space move to a fire
  double min_dwell = 0.1;       // s, shortest spray at a stop

  void validate() const;
  bool operator==(const StageTwoSpec&) const = default;
};

/// Apex configuration used to spray from the top at K5.
struct TopSpraySpec {
  double duration = 0.0;  // s; zero skips the move
  double theta2 = deg2rad(135.0);
  double theta3 = deg2rad(15.5);
  double theta4 = deg2rad(-45.0);

  void validate() const;
  bool operator==(const TopSpraySpec&) const = default;
};

struct FireSpot {
  std::string id;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // m
  bool serviced = false;

  bool operator==(const FireSpot&) const = default;
};

struct NamedPathPoint {
  std::string name;
  double s = 0.0;  // lap parameter, [0, lap)
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

struct PathPose {
  chassis::ChassisState pose;
  double curvature = 0.0;        // 1/m
  double curvature_rate = 0.0;   // d(curvature)/ds, 1/m^2
};

class Circuit {
 public:
  explicit Circuit(const CircuitSpec& spec);

  const CircuitSpec& spec() const { return spec_; }
  double lap_length() const { return 4.0 * spec_.edge_length; }
  double edge_time() const { return spec_.edge_length / spec_.speed; }
  double straight_length() const { return straight_; }
  double half_width() const { return half_width_; }  // centre to straight line

  /// Pose on the circuit for any path parameter (wraps modulo one lap).
  PathPose at(double s) const;

  const std::array<NamedPathPoint, 5>& k_points() const { return k_; }
  const std::array<NamedPathPoint, 8>& a_points() const { return a_; }

  /// Straight of group g (1..4) runs from A_{2g-1} to A_{2g}.
  struct Straight {
    int group = 0;
    Eigen::Vector2d start, end, direction;
    double s_start = 0.0;  // lap parameter of the start point
  };
  Straight straight(int group) const;

 private:
  double heading_local(double u) const;
  double curvature_local(double u) const;
  double curvature_rate_local(double u) const;
  Eigen::Vector2d position_local(double u) const;

  CircuitSpec spec_;
  double straight_ = 0.0;
  double half_width_ = 0.0;
  double corner_start_ = 0.0, corner_end_ = 0.0;  // local parameters of the arc
  Eigen::Vector2d corner_exit_ = Eigen::Vector2d::Zero();
  std::array<NamedPathPoint, 5> k_;
  std::array<NamedPathPoint, 8> a_;  // nominal tangency points on the straight lines
};

/// Chassis reference built from constant-speed pieces along the circuit.
class ChassisTrajectory {
 public:
  struct Piece {
    double t0 = 0.0, t1 = 0.0;
    double s0 = 0.0;
    double speed = 0.0;
  };

  ChassisTrajectory(const Circuit& circuit, double l);
  void add(double t0, double t1, double s0, double speed);
  const std::vector<Piece>& pieces() const { return pieces_; }

  double path_parameter(double t) const;
  chassis::ChassisReferenceSample sample(double t) const;

 private:
  const Piece& piece(double t) const;

  Circuit circuit_;
  double l_;
  std::vector<Piece> pieces_;
};

/// Piecewise-constant-velocity nozzle path with quintic velocity blends at
/// every corner. The blends are centred on the nominal corner times, so the
/// path rejoins the raster after each corner.
class RasterSweep {
 public:
  RasterSweep() = default;
  RasterSweep(std::vector<Eigen::Vector3d> velocities, std::vector<double> durations, Eigen::Vector3d start,
              double blend, double pitch);

  bool empty() const { return durations_.empty(); }
  double duration() const;
  arm::GlobalTarget target(double t) const;
  Eigen::Vector3d velocity(double t) const;
  double path_length() const;

 private:
  std::vector<Eigen::Vector3d> velocities_;
  std::vector<double> durations_;
  std::vector<double> corner_times_;
  Eigen::Vector3d start_ = Eigen::Vector3d::Zero();
  double blend_ = 0.0;
  double pitch_ = 0.0;
};

/// Raster over face `edge` (1..4). Face 1 is the face seen from straight 1.
/// Throws InfeasibleSweep when the raster cannot finish before the chassis
/// reaches the next K point.
RasterSweep build_sweep(int edge, const SweepSpec& spec, double edge_time);

/// Rasters for all four edges joined into one continuous path.
RasterSweep build_stage_one_sweep(const SweepSpec& spec, double edge_time);

// ---------------------------------------------------------------------------
// Residual fires
// ---------------------------------------------------------------------------

struct Stop {
  std::size_t fire = 0;    // index into the input fire list
  int group = 0;           // straight 1..4, i.e. A1A2, A3A4, ...
  int nearest_a = 0;       // 1..8
  double s = 0.0;          // lap parameter of C_i
  chassis::ChassisState pose;
};

std::string group_label(int group);

struct StopPlan {
  std::vector<Stop> stops;  // anti-clockwise from K5
};

StopPlan assign_fires(const std::vector<FireSpot>& fires, const Circuit& circuit);

struct ArmSetup {
  kinematics::Manipulator arm;
  kinematics::ToolOffset tool;
  arm::ArmMount mount;
};

struct DriveTo {
  std::size_t stop = 0;
  double s_from = 0.0, s_to = 0.0;  // unwrapped lap parameters
  double duration = 0.0;
};

struct ReachAndSpray {
  std::size_t stop = 0;
  std::string fire;
  kinematics::JointAngles joints;
  double dwell = 0.0;
};

struct Command {
  enum class Kind { drive, reach_and_spray } kind = Kind::drive;
  DriveTo drive;
  ReachAndSpray spray;
};

struct UnreachableFlame {
  std::string fire;
  std::string reason;
};

struct Dispatch {
  std::vector<Command> commands;
  std::vector<UnreachableFlame> flagged;
  double drive_time = 0.0;
  double dwell = 0.0;
};

Dispatch dispatch(const StopPlan& plan, const std::vector<FireSpot>& fires, const Circuit& circuit,
                  const ArmSetup& arm, const StageTwoSpec& stage2, double budget);

// ---------------------------------------------------------------------------
// State machine
// ---------------------------------------------------------------------------

enum class Phase { home, stage1, top_spray, stage2, end };
enum class SubPhase { none, sweep, transit, drive, spray };

struct MissionState {
  Phase phase = Phase::home;
  int index = 0;  // edge (stage 1) or stop (stage 2), 1-based
  SubPhase sub = SubPhase::none;

  std::string label() const;
  bool operator==(const MissionState&) const = default;
};

enum class MissionEvent { start, sweep_complete, edge_complete, top_spray_complete, arrived_at_stop, spray_complete };
const char* to_string(MissionEvent e);

struct MissionContext {
  int edges = 4;
  int stops = 0;
};

MissionState mission_step(const MissionState& state, MissionEvent event, const MissionContext& ctx);

// ---------------------------------------------------------------------------
// Whole-mission plan
// ---------------------------------------------------------------------------

struct MissionInputs {
  FireTestSpec fire_test;
  CircuitSpec circuit;
  SweepSpec sweep;
  StageTwoSpec stage2;
  TopSpraySpec top_spray;
  std::vector<FireSpot> fires;
  ArmSetup arm;
  double dt = 1e-3;
  double chassis_l = 0.3;
};

struct PhaseWindow {
  MissionState state;
  std::size_t k0 = 0, k1 = 0;  // grid steps, [k0, k1)
};

struct Marker {
  std::size_t k = 0;
  std::string label;
};

struct MissionPlan {
  Circuit circuit;
  ChassisTrajectory chassis;
  RasterSweep sweep;
  StopPlan stops;
  Dispatch commands;
  std::vector<PhaseWindow> phases;
  std::vector<Marker> markers;
  double dt = 0.0;
  std::size_t stage1_end = 0;     // grid step of K5
  std::size_t top_spray_end = 0;  // grid step
  std::size_t final_step = 0;     // last grid step (state End)
  // Grid windows of the Stage II legs: drive start, arrival, leg end.
  struct Leg {
    std::size_t drive_start = 0, arrive = 0, end = 0;
    std::size_t command = 0;  // index of the ReachAndSpray command
  };
  std::vector<Leg> legs;

  MissionState state_at(std::size_t k) const;
};

std::size_t to_step(double t, double dt);

/// Builds the full timeline. Checks the Stage I raster against the deadline
/// and against the arm workspace at every grid step.
MissionPlan plan_mission(const MissionInputs& in);

}  // namespace firebot::mission
