// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "firebot/arm_control.hpp"
#include "firebot/dynamics.hpp"
#include "firebot/kinematics.hpp"
#include "firebot/metrics.hpp"
#include "firebot/mission_planner.hpp"
#include "firebot/scenario.hpp"
#include "firebot/simulation.hpp"
#include "firebot/units.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

using namespace firebot;
using dynamics::Mat4;
using dynamics::Vec4;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Result {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Result()>& check) {
  Result r;
  try {
    r = check();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s %s: %s\n", r.pass ? "PASS" : "FAIL", name, r.detail.c_str());
  std::fflush(stdout);
  failures += !r.pass;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vec4 random_in_limits(std::mt19937_64& rng, const kinematics::JointLimits& l) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    Vec4 q;
    for (int i = 0; i < 4; ++i) q[i] = l.lower[i] + (l.upper[i] - l.lower[i]) * u(rng);
    if (kinematics::within_limits(kinematics::JointAngles::from(q), l)) return q;
  }
}

Result workspace_radii() {
  const auto cfg = scenario::parse_scenario("");
  const auto t0 = Clock::now();
  const auto ws = kinematics::workspace_analysis(scenario::manipulator(cfg), scenario::workspace_options(cfg));
  const double t = seconds_since(t0);
  const bool ok = std::abs(ws.r_min - 972.0) <= 1.0 && std::abs(ws.r_max - 2678.0) <= 1.0 && t < 1.0;
  return {ok, fmt("r_min %.2f mm, r_max %.2f mm, %.3f s", ws.r_min, ws.r_max, t)};
}

Result ik_round_trip() {
  const auto cfg = scenario::parse_scenario("");
  const auto arm = scenario::manipulator(cfg);
  const auto tool = scenario::tool(cfg);
  std::mt19937_64 rng(12345);
  double worst = 0.0;
  int errors = 0;
  for (int i = 0; i < 10000; ++i) {
    const Vec4 q = random_in_limits(rng, arm.limits);
    try {
      const auto back =
          kinematics::inverse_kinematics(arm, kinematics::forward_kinematics(arm, kinematics::JointAngles::from(q), tool), tool);
      worst = std::max(worst, (back.vector() - q).cwiseAbs().maxCoeff());
    } catch (const kinematics::KinematicsError&) {
      ++errors;
    }
  }
  return {worst < 1e-9 && errors == 0, fmt("max discrepancy %.3e rad, %d errors", worst, errors)};
}

Result dynamics_identities() {
  const auto cfg = scenario::parse_scenario("");
  auto model = scenario::arm_model(cfg);
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rvec = [&](double s) { return Vec4(s * u(rng), s * u(rng), s * u(rng), s * u(rng)); };

  bool symmetric = true;
  int chol_fail = 0;
  double skew = 0.0, grad = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const Vec4 q = random_in_limits(rng, model.arm.limits);
    const Mat4 M = dynamics::mass_matrix(model, q);
    symmetric = symmetric && M == M.transpose();
    chol_fail += Eigen::LLT<Mat4>(M).info() != Eigen::Success;

    const Vec4 qd = rvec(2.0), x = rvec(1.0);
    const auto dm = dynamics::mass_matrix_partials(model, q);
    Mat4 mdot = Mat4::Zero();
    for (int i = 0; i < 4; ++i) mdot += dm[i] * qd[i];
    skew = std::max(skew, std::abs(x.dot((mdot - 2.0 * dynamics::coriolis_matrix(model, q, qd)) * x)));

    const Vec4 g = dynamics::gravity_vector(model, q);
    Vec4 fd;
    for (int i = 0; i < 4; ++i) {
      Vec4 e = Vec4::Zero();
      e[i] = 1e-6;
      fd[i] = (dynamics::potential_energy(model, q + e) - dynamics::potential_energy(model, q - e)) / 2e-6;
    }
    grad = std::max(grad, (fd - g).norm() / g.norm());
  }

  // Free motion without gravity conserves kinetic energy.
  model.inertia.gravity = 0.0;
  model.inertia.viscous = {};
  Vec4 q(0.2, 1.0, -0.3, -0.4), qd(0.5, -0.3, 0.4, 0.2);
  const double dt = 1e-4;
  const double k0 = dynamics::kinetic_energy(model, q, qd);
  auto f = [&](const Vec4& qq, const Vec4& vv) { return dynamics::forward_dynamics(model, qq, vv, Vec4::Zero()); };
  for (int k = 0; k < 10000; ++k) {
    const Vec4 k1v = f(q, qd), k1q = qd;
    const Vec4 k2q = qd + 0.5 * dt * k1v, k2v = f(q + 0.5 * dt * k1q, k2q);
    const Vec4 k3q = qd + 0.5 * dt * k2v, k3v = f(q + 0.5 * dt * k2q, k3q);
    const Vec4 k4q = qd + dt * k3v, k4v = f(q + dt * k3q, k4q);
    q += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    qd += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }
  const double drift = std::abs(dynamics::kinetic_energy(model, q, qd) - k0) / k0;

  const bool ok = symmetric && chol_fail == 0 && skew < 1e-8 && grad < 1e-6 && drift < 1e-6;
  return {ok, fmt("symmetric %s, cholesky failures %d, skew %.2e, grad rel %.2e, KE drift %.2e",
                  symmetric ? "yes" : "no", chol_fail, skew, grad, drift)};
}

// Largest step-to-step rise of 1/2 s's over Stage I rows.
double max_arm_rise(const sim::SimLog& log) {
  double worst = 0.0;
  for (std::size_t i = 1; i < log.rows.size(); ++i) {
    if (log.rows[i].state.rfind("StageI:", 0) != 0) continue;
    worst = std::max(worst, 0.5 * log.arm_surface[i].squaredNorm() - 0.5 * log.arm_surface[i - 1].squaredNorm());
  }
  return worst;
}

double chatter(const sim::SimLog& log) {
  // Mean absolute second difference of the joint torques during sweeps.
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 2; i < log.rows.size(); ++i) {
    if (log.rows[i].state.find(":sweep") == std::string::npos) continue;
    sum += (log.rows[i].tau - 2.0 * log.rows[i - 1].tau + log.rows[i - 2].tau).cwiseAbs().maxCoeff();
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

// Per-step allowance for the zero-order-hold torque. The arm rises scale
// with dt^3, so the check below also demands they shrink when dt halves.
constexpr double kArmSlack = 1e-8;
constexpr double kChassisSlack = 1e-6;

Result arm_controller() {
  const auto cfg = scenario::parse_scenario("");
  const auto log = sim::run_mission(cfg);
  const auto m = metrics::compute_metrics(log);
  const double rise = max_arm_rise(log);

  auto fine_cfg = cfg;
  fine_cfg.dt = 0.5 * cfg.dt;
  const double fine_rise = max_arm_rise(sim::run_mission(fine_cfg));
  const bool vanishing = fine_rise <= rise / 4.0;

  auto sign_cfg = cfg;
  sign_cfg.arm.gains.boundary_layer = 0.0;
  const auto sign_log = sim::run_mission(sign_cfg);
  const auto sm = metrics::compute_metrics(sign_log);

  bool ok = rise <= kArmSlack && vanishing && m.sweep_samples > 0;
  for (double a : m.ee_avg_mm) ok = ok && a <= 5.0;
  return {ok, fmt("avg ee error %.4f/%.4f/%.4f mm, max rise of V %.2e (%.2e at dt/2); torque chatter saturation %.3e, sign %.3e "
                  "(sign avg %.4f/%.4f/%.4f mm)",
                  m.ee_avg_mm[0], m.ee_avg_mm[1], m.ee_avg_mm[2], rise, fine_rise, chatter(log), chatter(sign_log),
                  sm.ee_avg_mm[0], sm.ee_avg_mm[1], sm.ee_avg_mm[2])};
}

Result chassis_controller() {
  auto cfg = scenario::parse_scenario("");
  cfg.chassis.initial_offset = {-0.1, 0.0, -5.0};
  cfg.disturbance = {chassis::DisturbanceKind::sinusoid, {0.1, 0.1}, 1.5};
  const auto log = sim::run_mission(cfg);
  const auto m = metrics::compute_metrics(log);
  double rise = 0.0;
  for (std::size_t i = 1; i < log.rows.size(); ++i) {
    if (log.rows[i].state.rfind("StageI:", 0) != 0) continue;
    const auto& a = log.rows[i - 1];
    const auto& b = log.rows[i];
    rise = std::max(rise, 0.5 * (b.s1 * b.s1 + b.s2 * b.s2) - 0.5 * (a.s1 * a.s1 + a.s2 * a.s2));
  }
  const auto& g = cfg.chassis.gains;
  const bool bounded = g.P1 >= g.fm1 && g.P2 >= g.fm2;
  const bool ok = bounded && m.convergence_time >= 0.0 && m.convergence_time <= 1.0 && rise <= kChassisSlack;
  return {ok, fmt("in band after %.3f s and stays; max rise of V %.2e; Stage I max e1 %.2f mm e2 %.4f mm e3 %.3f deg",
                  m.convergence_time, rise, m.chassis_max_e1_mm, m.chassis_max_e2_mm, m.chassis_max_e3_deg)};
}

Result mission_timing() {
  const auto cfg = scenario::parse_scenario("");
  const auto m = metrics::compute_metrics(sim::run_mission(cfg));
  const double edge = cfg.circuit.edge_length / cfg.circuit.speed;
  const bool ok = std::abs(edge - 2.956) < 5e-4 && std::abs(m.stage1_time - 4.0 * edge) < 1e-9 &&
                  std::abs(m.stage1_time - 11.824) < 1e-9 && std::abs(m.mission_time - 14.824) < 1e-9 &&
                  m.within_discharge;
  return {ok, fmt("edge %.6f s, Stage I %.6f s, Stage II %.6f s, total %.6f s vs %.1f s discharge: %s", edge,
                  m.stage1_time, m.stage2_time, m.mission_time, m.discharge_time, m.within_discharge ? "PASS" : "FAIL")};
}

// Brute force over every A point, then projection onto that straight.
std::vector<std::pair<std::size_t, double>> brute_force(const std::vector<mission::FireSpot>& fires,
                                                        const mission::Circuit& c) {
  std::vector<std::pair<std::size_t, double>> out;
  const auto& a = c.a_points();
  for (std::size_t i = 0; i < fires.size(); ++i) {
    const Eigen::Vector2d f = fires[i].position.head<2>();
    std::size_t best = 0;
    for (std::size_t j = 1; j < a.size(); ++j) {
      if ((a[j].position - f).norm() < (a[best].position - f).norm()) best = j;
    }
    const Eigen::Vector2d p0 = best % 2 ? a[best - 1].position : a[best].position;
    const Eigen::Vector2d p1 = best % 2 ? a[best].position : a[best + 1].position;
    const double len = (p1 - p0).norm();
    const double u = std::clamp((f - p0).dot(p1 - p0) / len, 0.0, len);
    out.emplace_back(best + 1, std::fmod(a[best % 2 ? best - 1 : best].s + u, c.lap_length()));
  }
  return out;
}

Result algorithm_oracle() {
  const auto cfg = scenario::parse_scenario("");
  const mission::Circuit c(cfg.circuit);
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> xy(-0.5 * cfg.fire_test.crib_side, 0.5 * cfg.fire_test.crib_side), z(0.1, 1.0);
  std::uniform_int_distribution<int> count(1, 10);
  int mismatches = 0, order_breaks = 0, total = 0;
  for (int set = 0; set < 50; ++set) {
    std::vector<mission::FireSpot> fires;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) fires.push_back({"F" + std::to_string(i + 1), {xy(rng), xy(rng), z(rng)}, false});
    const auto plan = mission::assign_fires(fires, c);
    const auto want = brute_force(fires, c);
    std::vector<bool> seen(fires.size(), false);
    for (std::size_t i = 0; i < plan.stops.size(); ++i) {
      const auto& s = plan.stops[i];
      ++total;
      seen[s.fire] = true;
      if (static_cast<std::size_t>(s.nearest_a) != want[s.fire].first || std::abs(s.s - want[s.fire].second) > 1e-12) {
        ++mismatches;
      }
      if (i > 0 && plan.stops[i - 1].s > s.s) ++order_breaks;
    }
    for (bool b : seen) mismatches += !b;
  }
  const auto worked = mission::assign_fires(cfg.fires, c);
  bool case_ok = worked.stops.size() == 2;
  for (const auto& s : worked.stops) {
    const std::string& id = cfg.fires[s.fire].id;
    case_ok = case_ok && ((id == "F1" && mission::group_label(s.group) == "A1A2") ||
                          (id == "F2" && mission::group_label(s.group) == "A3A4"));
  }
  return {mismatches == 0 && order_breaks == 0 && case_ok,
          fmt("%d stops over 50 sets, %d mismatches, %d order breaks, worked case %s", total, mismatches,
              order_breaks, case_ok ? "reproduced" : "wrong")};
}

Result determinism() {
  auto cfg = scenario::parse_scenario("");
  cfg.disturbance = {chassis::DisturbanceKind::noise, {0.05, 0.05}, 1.0};
  const auto a = sim::run_mission(cfg), b = sim::run_mission(cfg);
  const std::string csv_a = metrics::to_csv(a), csv_b = metrics::to_csv(b);
  const auto report = metrics::compute_metrics(a);
  const auto again = metrics::compute_metrics(metrics::from_csv(csv_a));
  const bool ok = csv_a == csv_b && report == again;
  return {ok, fmt("%zu bytes, logs %s, recomputed metrics %s", csv_a.size(), csv_a == csv_b ? "identical" : "differ",
                  report == again ? "equal" : "differ")};
}

}  // namespace

int main() {
  report("workspace radii", workspace_radii);
  report("IK/FK round trip", ik_round_trip);
  report("dynamics identities", dynamics_identities);
  report("arm controller", arm_controller);
  report("chassis controller", chassis_controller);
  report("mission timing", mission_timing);
  report("fire assignment oracle", algorithm_oracle);
  report("determinism and export", determinism);
  return failures == 0 ? 0 : 1;
}
