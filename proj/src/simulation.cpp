#include "firebot/simulation.hpp"

#include "firebot/units.hpp"

#include <map>
#include <sstream>

namespace firebot::sim {

namespace {

using arm::ArmReferenceSample;

Vec4 unwrap_first(Vec4 target, const Vec4& from) {
  target[0] = from[0] + wrap_angle(target[0] - from[0]);
  return target;
}

// Joint-space reference over the whole grid: the Stage I raster solved
// through the chassis reference, then quintic moves between rest poses.
std::vector<Vec4> joint_reference(const scenario::ScenarioConfig& cfg, const mission::MissionPlan& plan) {
  const double dt = plan.dt;
  const std::size_t n = plan.final_step + 1;
  const auto arm = scenario::manipulator(cfg);
  const auto tool = scenario::tool(cfg);
  std::vector<Vec4> q(n);

  const auto apex = scenario::top_spray_joints(cfg).vector();
  const std::size_t n1 = plan.stage1_end;
  if (!plan.sweep.empty()) {
    std::vector<chassis::ChassisState> poses(n1 + 1);
    std::vector<arm::GlobalTarget> targets(n1 + 1);
    for (std::size_t k = 0; k <= n1; ++k) {
      poses[k] = plan.chassis.sample(static_cast<double>(k) * dt).pose;
      targets[k] = plan.sweep.target(static_cast<double>(k) * dt);
    }
    const auto stage1 = arm::solve_series(arm, tool, cfg.arm.mount, poses, targets);
    std::copy(stage1.begin(), stage1.end(), q.begin());
  } else {
    // No raster: park at the apex, facing the crib side of the chassis.
    Vec4 park = apex;
    park[0] = kPi / 2.0;
    std::fill(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(n1 + 1), park);
  }

  // State at the end of Stage I from one-sided differences.
  ArmReferenceSample cur;
  {
    const std::size_t lo = n1 >= 3 ? n1 - 3 : 0;
    std::vector<Vec4> tail(q.begin() + static_cast<std::ptrdiff_t>(lo), q.begin() + static_cast<std::ptrdiff_t>(n1 + 1));
    cur = arm::differentiate(tail, dt).samples.back();
  }

  auto move = [&](std::size_t k0, std::size_t k1, const Vec4& goal, double duration) {
    ArmReferenceSample to;
    to.q = unwrap_first(goal, cur.q);
    if (k1 <= k0) return;
    const arm::QuinticSegment seg(cur, to, std::max(duration, dt));
    for (std::size_t k = k0 + 1; k <= k1; ++k) q[k] = seg.at(static_cast<double>(k - k0) * dt).q;
    cur = seg.at(static_cast<double>(k1 - k0) * dt);
  };

  if (plan.top_spray_end > n1) {
    const double dur = static_cast<double>(plan.top_spray_end - n1) * dt;
    Vec4 goal = apex;
    goal[0] = cur.q[0];
    move(n1, plan.top_spray_end, goal, std::min(dur, std::max(cfg.stage2.min_transition_s, dur / 2.0)));
  }
  for (const auto& leg : plan.legs) {
    const auto& spray = plan.commands.commands[leg.command].spray;
    const double drive = static_cast<double>(leg.arrive - leg.drive_start) * dt;
    const double room = static_cast<double>(leg.end - leg.drive_start) * dt;
    move(leg.drive_start, leg.end, spray.joints.vector(),
         std::min(room, std::max(cfg.stage2.min_transition_s, drive)));
  }
  return q;
}

struct ArmState {
  Vec4 q, qd;
};

ArmState arm_step(const dynamics::ArmModel& model, const ArmState& s, const Vec4& tau, double dt,
                  chassis::Integrator method) {
  const Vec4 b = Eigen::Map<const Vec4>(model.inertia.viscous.data());
  auto acc = [&](const Vec4& q, const Vec4& qd) {
    return dynamics::forward_dynamics(model, q, qd, tau - b.cwiseProduct(qd));
  };
  if (method == chassis::Integrator::euler) {
    const Vec4 a = acc(s.q, s.qd);
    return {s.q + dt * s.qd, s.qd + dt * a};
  }
  const Vec4 k1q = s.qd, k1v = acc(s.q, s.qd);
  const Vec4 k2q = s.qd + 0.5 * dt * k1v, k2v = acc(s.q + 0.5 * dt * k1q, k2q);
  const Vec4 k3q = s.qd + 0.5 * dt * k2v, k3v = acc(s.q + 0.5 * dt * k2q, k3q);
  const Vec4 k4q = s.qd + dt * k3v, k4v = acc(s.q + dt * k3q, k4q);
  return {s.q + dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q), s.qd + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)};
}

}  // namespace

SimLog run_mission(const scenario::ScenarioConfig& config) {
  return run_mission(config, mission::plan_mission(scenario::mission_inputs(config)));
}

SimLog run_mission(const scenario::ScenarioConfig& cfg, const mission::MissionPlan& plan) {
  const double dt = plan.dt;
  const auto model = scenario::arm_model(cfg);
  const auto& gains = cfg.chassis.gains;
  const std::size_t n = plan.final_step + 1;

  const auto ref = arm::differentiate(joint_reference(cfg, plan), dt);

  std::map<std::size_t, std::string> events;
  for (const auto& m : plan.markers) {
    auto& e = events[m.k];
    e += (e.empty() ? "" : ";") + m.label;
  }

  // Chassis start pose, offset from the reference in its body frame.
  const auto r0 = plan.chassis.sample(0.0);
  const auto& off = cfg.chassis.initial_offset;
  const double c0 = std::cos(r0.pose.phi), s0 = std::sin(r0.pose.phi);
  chassis::ChassisState pose{r0.pose.x + c0 * off.along_m - s0 * off.lateral_m,
                             r0.pose.y + s0 * off.along_m + c0 * off.lateral_m,
                             wrap_angle(r0.pose.phi + deg2rad(off.heading_deg))};
  chassis::ChassisVelocity z = r0.vel;
  chassis::Disturbance disturbance(scenario::disturbance(cfg));

  // The arm starts on its reference; the chassis is already moving at t = 0.
  ArmState arm{ref.samples[0].q, ref.samples[0].qd};

  SimLog log;
  log.dt = dt;
  log.rows.reserve(n);
  log.arm_surface.reserve(n);

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    try {
      const auto r = plan.chassis.sample(t);
      const auto e = chassis::tracking_error(r.pose, pose, gains.l);
      const auto edot = chassis::error_rates(e, r, pose, z, gains.l);
      const auto ctl = chassis::chassis_control_law(e, edot, r, pose, z, gains);
      const auto f = disturbance.next(t);

      const auto& ar = ref.samples[k];
      const auto actl = arm::arm_control_law(model, arm.q, arm.qd, ar, cfg.arm.gains);

      SimRow row;
      row.time = t;
      row.state = plan.state_at(k).label();
      row.X = pose.x;
      row.Y = pose.y;
      row.phi = pose.phi;
      row.v = z.v;
      row.w = z.w;
      row.e1 = e.e1;
      row.e2 = e.e2;
      row.e3 = e.e3;
      row.s1 = ctl.s[0];
      row.s2 = ctl.s[1];
      row.u1 = ctl.u[0];
      row.u2 = ctl.u[1];
      const auto tracks = chassis::track_speeds(z, cfg.chassis.track_width_m);
      row.vL = tracks[0];
      row.vR = tracks[1];
      row.q = arm.q;
      row.qd = arm.qd;
      row.tau = actl.torque;
      row.ee = arm::tool_position(model.arm, model.tool, cfg.arm.mount, pose, arm.q);
      row.tgt = arm::tool_position(model.arm, model.tool, cfg.arm.mount, r.pose, ar.q);
      if (auto it = events.find(k); it != events.end()) row.event = it->second;
      log.rows.push_back(std::move(row));
      log.arm_surface.push_back(actl.s);

      if (k + 1 == n) break;
      const auto r_mid = plan.chassis.sample(t + 0.5 * dt);
      const auto r_next = plan.chassis.sample(static_cast<double>(k + 1) * dt);
      const auto z_next = chassis::reduced_dynamics_step(z, r.vel, r_next.vel, ctl.u, f, gains, dt);
      pose = chassis::integrate_pose(pose, z, r.vel, r_mid.vel, r_next.vel, ctl.u, f, dt, cfg.integrator);
      z = z_next;
      arm = arm_step(model, arm, actl.torque, dt, cfg.integrator);
    } catch (const std::exception& ex) {
      std::ostringstream os;
      os << "t = " << t << " s (" << plan.state_at(k).label() << "): " << ex.what();
      throw std::runtime_error(os.str());
    }
  }
  return log;
}

}  // namespace firebot::sim
