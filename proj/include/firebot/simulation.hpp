#pragma once

#include "firebot/mission_planner.hpp"
#include "firebot/scenario.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace firebot::sim {

using dynamics::Vec4;

/// One sample of the closed loop on the dt grid. Field order follows the
/// CSV columns.
struct SimRow {
  double time = 0.0;
  std::string state;
  double X = 0.0, Y = 0.0, phi = 0.0;
  double v = 0.0, w = 0.0;
  double e1 = 0.0, e2 = 0.0, e3 = 0.0;
  double s1 = 0.0, s2 = 0.0;
  double u1 = 0.0, u2 = 0.0;
  double vL = 0.0, vR = 0.0;
  Vec4 q = Vec4::Zero(), qd = Vec4::Zero(), tau = Vec4::Zero();
  Eigen::Vector3d ee = Eigen::Vector3d::Zero();   // m, global
  Eigen::Vector3d tgt = Eigen::Vector3d::Zero();  // m, global
  std::string event;                              // ';'-joined markers

  bool operator==(const SimRow&) const = default;
};

struct SimLog {
  double dt = 0.0;
  std::vector<SimRow> rows;
  // Arm sliding surface per row. Not part of the CSV export.
  std::vector<Vec4> arm_surface;
};

/// Runs the full mission on the configured grid. Module errors are rethrown
/// as std::runtime_error with the simulation time attached.
SimLog run_mission(const scenario::ScenarioConfig& config);

/// Same, reusing a plan built from the same config.
SimLog run_mission(const scenario::ScenarioConfig& config, const mission::MissionPlan& plan);

}  // namespace firebot::sim
