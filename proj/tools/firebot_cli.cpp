// Command-line front end: workspace analysis, single IK solves, mission
// planning, full simulation and metric recomputation.

#include "firebot/metrics.hpp"
#include "firebot/mission_planner.hpp"
#include "firebot/scenario.hpp"
#include "firebot/simulation.hpp"
#include "firebot/units.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace firebot;
using nlohmann::ordered_json;

namespace {

scenario::ScenarioConfig load(const std::string& path) {
  return path.empty() ? scenario::parse_scenario("") : scenario::load_scenario(path);
}

ordered_json point_json(const Eigen::Vector2d& p) { return {p.x(), p.y()}; }

int cmd_workspace(const std::string& scenario_path, const std::string& out_dir) {
  const auto cfg = load(scenario_path);
  const auto ws = kinematics::workspace_analysis(scenario::manipulator(cfg), scenario::workspace_options(cfg));
  ordered_json j;
  j["r_min_mm"] = ws.r_min;
  j["r_max_mm"] = ws.r_max;
  j["tool_radius_min_mm"] = ws.chain_r_min;
  j["tool_radius_max_mm"] = ws.chain_r_max;
  j["grid_samples"] = ws.grid_samples;
  j["boundary_samples"] = ws.boundary.size();
  j["cloud_points"] = ws.cloud.size();
  ordered_json checks = ordered_json::array();
  for (const auto& c : ws.checks) checks.push_back({{"name", c.name}, {"reachable", c.reachable}, {"reason", c.reason}});
  j["checks"] = checks;
  std::cout << j.dump(2) << "\n";

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream b(std::filesystem::path(out_dir) / "boundary.csv");
    b << "curve,r_mm,z_mm\n";
    for (const auto& s : ws.boundary) {
      b << kinematics::to_string(s.curve) << ',' << metrics::format_double(s.r) << ',' << metrics::format_double(s.z)
        << '\n';
    }
    std::ofstream c(std::filesystem::path(out_dir) / "cloud.csv");
    c << "x_mm,y_mm,z_mm\n";
    for (const auto& p : ws.cloud) {
      c << metrics::format_double(p.x()) << ',' << metrics::format_double(p.y()) << ','
        << metrics::format_double(p.z()) << '\n';
    }
  }
  return 0;
}

int cmd_ik(double x, double y, double z, double phi_deg, const std::string& scenario_path) {
  const auto cfg = load(scenario_path);
  try {
    const auto q = kinematics::inverse_kinematics(scenario::manipulator(cfg), {x, y, z, deg2rad(phi_deg)},
                                                  scenario::tool(cfg));
    std::cout << "theta1_deg " << rad2deg(q.theta1) << "\n"
              << "theta2_deg " << rad2deg(q.theta2) << "\n"
              << "theta3_deg " << rad2deg(q.theta3) << "\n"
              << "theta4_deg " << rad2deg(q.theta4) << "\n";
    return 0;
  } catch (const kinematics::KinematicsError& e) {
    std::cerr << "unreachable: " << e.what() << "\n";
    return 2;
  }
}

int cmd_plan(const std::string& scenario_path, const std::string& out_file) {
  const auto cfg = load(scenario_path);
  const auto plan = mission::plan_mission(scenario::mission_inputs(cfg));
  const auto& circuit = plan.circuit;

  ordered_json j;
  j["circuit"] = {{"lap_length_m", circuit.lap_length()},
                  {"edge_time_s", circuit.edge_time()},
                  {"straight_length_m", circuit.straight_length()},
                  {"half_width_m", circuit.half_width()}};
  ordered_json k = ordered_json::array(), a = ordered_json::array();
  for (const auto& p : circuit.k_points()) k.push_back({{"name", p.name}, {"s_m", p.s}, {"xy_m", point_json(p.position)}});
  for (const auto& p : circuit.a_points()) a.push_back({{"name", p.name}, {"s_m", p.s}, {"xy_m", point_json(p.position)}});
  j["k_points"] = k;
  j["a_points"] = a;

  ordered_json stops = ordered_json::array();
  for (const auto& s : plan.stops.stops) {
    stops.push_back({{"fire", cfg.fires[s.fire].id},
                     {"group", mission::group_label(s.group)},
                     {"nearest", "A" + std::to_string(s.nearest_a)},
                     {"s_m", s.s},
                     {"pose", {s.pose.x, s.pose.y, rad2deg(s.pose.phi)}}});
  }
  j["stops"] = stops;

  ordered_json cmds = ordered_json::array();
  for (const auto& c : plan.commands.commands) {
    if (c.kind == mission::Command::Kind::drive) {
      cmds.push_back({{"drive_to", c.drive.stop}, {"from_s_m", c.drive.s_from}, {"to_s_m", c.drive.s_to},
                      {"duration_s", c.drive.duration}});
    } else {
      const auto& q = c.spray.joints;
      cmds.push_back({{"reach_and_spray", c.spray.fire},
                      {"joints_deg", {rad2deg(q.theta1), rad2deg(q.theta2), rad2deg(q.theta3), rad2deg(q.theta4)}},
                      {"dwell_s", c.spray.dwell}});
    }
  }
  j["commands"] = cmds;
  ordered_json flagged = ordered_json::array();
  for (const auto& f : plan.commands.flagged) flagged.push_back({{"fire", f.fire}, {"reason", f.reason}});
  j["unreachable"] = flagged;

  ordered_json phases = ordered_json::array();
  for (const auto& p : plan.phases) {
    phases.push_back({{"state", p.state.label()}, {"t0_s", static_cast<double>(p.k0) * plan.dt},
                      {"t1_s", static_cast<double>(p.k1) * plan.dt}});
  }
  j["phases"] = phases;
  j["mission_time_s"] = static_cast<double>(plan.final_step) * plan.dt;

  const std::string text = j.dump(2) + "\n";
  if (out_file.empty()) {
    std::cout << text;
  } else {
    std::ofstream(out_file) << text;
  }
  return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir) {
  const auto cfg = load(scenario_path);
  const auto log = sim::run_mission(cfg);
  const auto report = metrics::compute_metrics(log);
  metrics::export_run(log, report, out_dir);
  std::cout << metrics::report_json(report);
  return report.within_discharge ? 0 : 3;
}

int cmd_metrics(const std::string& csv) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw metrics::IoError("cannot open " + csv);
  std::stringstream ss;
  ss << in.rdbuf();
  std::cout << metrics::report_json(metrics::compute_metrics(metrics::from_csv(ss.str())));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fire-fighting mobile manipulator: kinematics, planning and closed-loop simulation"};
  app.require_subcommand(1);

  std::string scenario_path, out;
  auto* ws = app.add_subcommand("workspace", "Workspace radii, boundary and point cloud");
  ws->add_option("--scenario", scenario_path, "Scenario file (defaults if omitted)");
  ws->add_option("--out", out, "Directory for boundary.csv and cloud.csv");

  double x = 0, y = 0, z = 0, phi = 0;
  auto* ik = app.add_subcommand("ik", "Solve joints (deg) for a tool point in mm and pitch in deg");
  ik->add_option("x", x)->required();
  ik->add_option("y", y)->required();
  ik->add_option("z", z)->required();
  ik->add_option("phi", phi)->required();
  ik->add_option("--scenario", scenario_path, "Scenario file for arm constants");

  auto* plan = app.add_subcommand("plan", "Print the circuit, stop plan and command list");
  plan->add_option("scenario", scenario_path, "Scenario file")->required();
  plan->add_option("--out", out, "Write the plan to this file instead of stdout");

  auto* simulate = app.add_subcommand("simulate", "Run the full mission and export the logs");
  simulate->add_option("scenario", scenario_path, "Scenario file")->required();
  simulate->add_option("--out", out, "Output directory")->required();

  std::string csv;
  auto* met = app.add_subcommand("metrics", "Recompute the metrics report from an exported log.csv");
  met->add_option("csv", csv, "log.csv from simulate")->required();

  auto* defaults = app.add_subcommand("defaults", "Print the default scenario");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*ws) return cmd_workspace(scenario_path, out);
    if (*ik) return cmd_ik(x, y, z, phi, scenario_path);
    if (*plan) return cmd_plan(scenario_path, out);
    if (*simulate) return cmd_simulate(scenario_path, out);
    if (*met) return cmd_metrics(csv);
    if (*defaults) {
      std::cout << scenario::serialize(scenario::parse_scenario(""));
      return 0;
    }
  } catch (const scenario::ValidationError& e) {
    std::cerr << "invalid scenario (" << e.key() << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
