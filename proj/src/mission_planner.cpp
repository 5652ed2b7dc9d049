#include "firebot/mission_planner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace firebot::mission {

namespace {

constexpr double kDeadlineSlack = 1e-9;  // s, absorbs rounding in length / speed

// Quintic smoothstep and its integral, with the usual clamping.
double smoothstep(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

double smoothstep_rate(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double y = x * (1.0 - x);
  return 30.0 * y * y;
}

double smoothstep_integral(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return x - 0.5;
  const double x4 = x * x * x * x;
  return x4 * (2.5 + x * (-3.0 + x));
}

// Step of width b centred at 0 (b == 0: unit step), its integral and rate.
double blended_step(double x, double b) { return b > 0.0 ? smoothstep(x / b + 0.5) : (x >= 0.0 ? 1.0 : 0.0); }
double blended_ramp(double x, double b) { return b > 0.0 ? b * smoothstep_integral(x / b + 0.5) : std::max(x, 0.0); }
double blended_impulse(double x, double b) { return b > 0.0 ? smoothstep_rate(x / b + 0.5) / b : 0.0; }

Eigen::Vector2d rotate(const Eigen::Vector2d& p, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * p.x() - s * p.y(), s * p.x() + c * p.y()};
}

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
constexpr std::array<double, 8> kGaussX{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                        -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                        0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGaussW{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                        0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                        0.2223810344533745, 0.1012285362903763};

}  // namespace

void FireTestSpec::validate() const {
  if (!(crib_side > 0.0)) throw std::invalid_argument("fire_test.crib_side_m must be > 0");
  if (!(discharge_time > 0.0)) throw std::invalid_argument("fire_test.discharge_time_s must be > 0");
  if (!(stage2_budget >= 0.0)) throw std::invalid_argument("fire_test.stage2_budget_s must be >= 0");
}

void CircuitSpec::validate() const {
  if (!(speed > 0.0) || !std::isfinite(speed)) throw GeometryError("circuit.speed_mps must be > 0");
  if (!(edge_length > 0.0)) throw GeometryError("circuit.edge_length_m must be > 0");
  if (!(corner_radius >= min_corner_radius)) {
    throw GeometryError("circuit.corner_radius_m below the minimum of " + std::to_string(min_corner_radius) +
                        " m; corners would turn too sharply");
  }
  const double arc = kPi * corner_radius / 2.0;
  const double straight = edge_length - arc;
  if (!(straight > 0.0)) throw GeometryError("circuit: corner arc longer than the edge; no straight left");
  if (!(blend_length >= 0.0) || blend_length > arc || blend_length > straight) {
    throw GeometryError("circuit.blend_length_m must lie in [0, min(arc, straight)]");
  }
}

double SweepSpec::face_length() const {
  if (passes <= 0) return 0.0;
  return passes * horizontal_span + (passes > 1 ? vertical_span : 0.0);
}

void SweepSpec::validate() const {
  if (passes < 0) throw InfeasibleSweep("sweep.passes must be >= 0");
  if (passes > 0 && passes % 2 == 0) {
    throw InfeasibleSweep("sweep.passes must be odd so each face ends where the next one starts");
  }
  if (!(speed > 0.0)) throw InfeasibleSweep("sweep.speed_mps must be > 0");
  if (!(horizontal_span > 0.0)) throw InfeasibleSweep("sweep.horizontal_span_m must be > 0");
  if (!(vertical_span >= 0.0)) throw InfeasibleSweep("sweep.vertical_span_m must be >= 0");
  if (!(corner_blend >= 0.0)) throw InfeasibleSweep("sweep.corner_blend_s must be >= 0");
  if (!(pitch >= 0.0 && pitch <= kPi / 2.0)) throw InfeasibleSweep("sweep.pitch_deg must be in [0, 90]");
}

void StageTwoSpec::validate() const {
  if (!(spray_pitch >= 0.0 && spray_pitch <= kPi / 2.0)) {
    throw std::invalid_argument("stage2.spray_pitch_deg must be in [0, 90]");
  }
  if (!(min_transition > 0.0)) throw std::invalid_argument("stage2.min_transition_s must be > 0");
  if (!(min_dwell > 0.0)) throw std::invalid_argument("stage2.min_dwell_s must be > 0");
}

void TopSpraySpec::validate() const {
  if (!(duration >= 0.0)) throw std::invalid_argument("top_spray.duration_s must be >= 0");
}

// ---------------------------------------------------------------------------
// Circuit
// ---------------------------------------------------------------------------

Circuit::Circuit(const CircuitSpec& spec) : spec_(spec) {
  spec_.validate();
  const double arc = kPi * spec_.corner_radius / 2.0;
  straight_ = spec_.edge_length - arc;
  corner_start_ = straight_ / 2.0;
  corner_end_ = corner_start_ + arc;

  // Integrate once through the corner; everything after it is straight.
  const double b = spec_.blend_length;
  corner_exit_ = Eigen::Vector2d(corner_start_ - b / 2.0, 0.0);
  {
    const double from = corner_start_ - b / 2.0, to = corner_end_ + b / 2.0;
    std::array<double, 4> cuts{from, corner_start_ + b / 2.0, corner_end_ - b / 2.0, to};
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double lo = cuts[i], hi = cuts[i + 1];
      if (hi <= lo) continue;
      const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / 0.05)));
      for (int p = 0; p < panels; ++p) {
        const double a = lo + (hi - lo) * p / panels, c = lo + (hi - lo) * (p + 1) / panels;
        for (std::size_t g = 0; g < kGaussX.size(); ++g) {
          const double u = 0.5 * (a + c) + 0.5 * (c - a) * kGaussX[g];
          const double h = heading_local(u);
          corner_exit_ += 0.5 * (c - a) * kGaussW[g] * Eigen::Vector2d(std::cos(h), std::sin(h));
        }
      }
    }
  }
  const Eigen::Vector2d end = position_local(spec_.edge_length);
  half_width_ = end.x();

  const Eigen::Vector2d center(spec_.center_x, spec_.center_y);
  const double lap = lap_length();
  for (int i = 0; i < 5; ++i) {
    const double ang = (i % 4) * kPi / 2.0;
    k_[i] = {"K" + std::to_string(i + 1), i == 4 ? lap : i * spec_.edge_length,
             center + rotate({0.0, -half_width_}, ang)};
  }
  for (int g = 1; g <= 4; ++g) {
    const auto st = straight(g);
    a_[2 * g - 2] = {"A" + std::to_string(2 * g - 1), st.s_start, st.start};
    a_[2 * g - 1] = {"A" + std::to_string(2 * g), std::fmod(st.s_start + straight_, lap), st.end};
  }
}

double Circuit::heading_local(double u) const {
  const double b = spec_.blend_length;
  return (blended_ramp(u - corner_start_, b) - blended_ramp(u - corner_end_, b)) / spec_.corner_radius;
}

double Circuit::curvature_local(double u) const {
  const double b = spec_.blend_length;
  return (blended_step(u - corner_start_, b) - blended_step(u - corner_end_, b)) / spec_.corner_radius;
}

double Circuit::curvature_rate_local(double u) const {
  const double b = spec_.blend_length;
  return (blended_impulse(u - corner_start_, b) - blended_impulse(u - corner_end_, b)) / spec_.corner_radius;
}

Eigen::Vector2d Circuit::position_local(double u) const {
  const double b = spec_.blend_length;
  const double from = corner_start_ - b / 2.0, to = corner_end_ + b / 2.0;
  if (u <= from) return {u, 0.0};
  if (u >= to) return corner_exit_ + Eigen::Vector2d(0.0, u - to);

  Eigen::Vector2d p(from, 0.0);
  std::array<double, 4> cuts{from, corner_start_ + b / 2.0, corner_end_ - b / 2.0, to};
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = std::min(cuts[i + 1], u);
    if (hi <= lo) continue;
    const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / 0.05)));
    for (int k = 0; k < panels; ++k) {
      const double a = lo + (hi - lo) * k / panels, c = lo + (hi - lo) * (k + 1) / panels;
      for (std::size_t g = 0; g < kGaussX.size(); ++g) {
        const double x = 0.5 * (a + c) + 0.5 * (c - a) * kGaussX[g];
        const double h = heading_local(x);
        p += 0.5 * (c - a) * kGaussW[g] * Eigen::Vector2d(std::cos(h), std::sin(h));
      }
    }
    if (cuts[i + 1] >= u) break;
  }
  return p;
}

PathPose Circuit::at(double s) const {
  const double lap = lap_length();
  double w = std::fmod(s, lap);
  if (w < 0.0) w += lap;
  int quarter = static_cast<int>(std::floor(w / spec_.edge_length));
  quarter = std::clamp(quarter, 0, 3);
  const double u = w - quarter * spec_.edge_length;
  const double ang = quarter * kPi / 2.0;

  const Eigen::Vector2d p = k_[quarter].position + rotate(position_local(u), ang);
  PathPose out;
  out.pose = {p.x(), p.y(), wrap_angle(ang + heading_local(u))};
  out.curvature = curvature_local(u);
  out.curvature_rate = curvature_rate_local(u);
  return out;
}

Circuit::Straight Circuit::straight(int group) const {
  if (group < 1 || group > 4) throw std::out_of_range("circuit straight index must be 1..4");
  const double ang = (group - 1) * kPi / 2.0;
  const Eigen::Vector2d dir(std::cos(ang), std::sin(ang));
  const Eigen::Vector2d mid = k_[group - 1].position;
  Straight st;
  st.group = group;
  st.direction = dir;
  st.start = mid - dir * (straight_ / 2.0);
  st.end = mid + dir * (straight_ / 2.0);
  double s0 = (group - 1) * spec_.edge_length - straight_ / 2.0;
  if (s0 < 0.0) s0 += lap_length();
  st.s_start = s0;
  return st;
}

// ---------------------------------------------------------------------------
// Chassis trajectory
// ---------------------------------------------------------------------------

ChassisTrajectory::ChassisTrajectory(const Circuit& circuit, double l) : circuit_(circuit), l_(l) {}

void ChassisTrajectory::add(double t0, double t1, double s0, double speed) {
  if (!pieces_.empty() && t0 < pieces_.back().t1 - 1e-12) {
    throw std::invalid_argument("chassis trajectory pieces must be added in time order");
  }
  pieces_.push_back({t0, t1, s0, speed});
}

const ChassisTrajectory::Piece& ChassisTrajectory::piece(double t) const {
  if (pieces_.empty()) throw std::logic_error("chassis trajectory has no pieces");
  // Last piece that has started; the final piece also covers any later time.
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                             [](double x, const Piece& p) { return x < p.t0; });
  if (it == pieces_.begin()) return pieces_.front();
  return *std::prev(it);
}

double ChassisTrajectory::path_parameter(double t) const {
  const auto& p = piece(t);
  const double tau = std::clamp(t - p.t0, 0.0, p.t1 - p.t0);
  return p.s0 + p.speed * tau;
}

chassis::ChassisReferenceSample ChassisTrajectory::sample(double t) const {
  const auto& p = piece(t);
  const bool moving = t < p.t1;
  const double v = moving ? p.speed : 0.0;
  const auto pp = circuit_.at(path_parameter(t));

  chassis::ChassisReferenceSample r;
  r.pose = pp.pose;
  r.vel = {v, v * pp.curvature};
  r.acc = {0.0, v * v * pp.curvature_rate};
  // The tracked point sits l to the left, so it moves at v - l w.
  const double c = std::cos(pp.pose.phi), s = std::sin(pp.pose.phi);
  const double vp = v - l_ * r.vel.w;
  r.vdx = vp * c;
  r.vdy = vp * s;
  r.vdx_dot = -l_ * r.acc.w * c - vp * r.vel.w * s;
  r.vdy_dot = -l_ * r.acc.w * s + vp * r.vel.w * c;
  r.wd = r.vel.w;
  r.wd_dot = r.acc.w;
  return r;
}

// ---------------------------------------------------------------------------
// Raster sweep
// ---------------------------------------------------------------------------

RasterSweep::RasterSweep(std::vector<Eigen::Vector3d> velocities, std::vector<double> durations,
                         Eigen::Vector3d start, double blend, double pitch)
    : velocities_(std::move(velocities)), durations_(std::move(durations)), start_(start), blend_(blend),
      pitch_(pitch) {
  if (velocities_.size() != durations_.size()) throw std::invalid_argument("raster legs mismatch");
  double t = 0.0;
  for (std::size_t i = 0; i + 1 < durations_.size(); ++i) {
    t += durations_[i];
    corner_times_.push_back(t);
  }
}

double RasterSweep::duration() const { return std::accumulate(durations_.begin(), durations_.end(), 0.0); }

double RasterSweep::path_length() const {
  double len = 0.0;
  for (std::size_t i = 0; i < durations_.size(); ++i) len += velocities_[i].norm() * durations_[i];
  return len;
}

arm::GlobalTarget RasterSweep::target(double t) const {
  arm::GlobalTarget out;
  out.pitch = pitch_;
  if (empty()) {
    out.position = start_;
    return out;
  }
  const double tc = std::clamp(t, 0.0, duration());
  Eigen::Vector3d p = start_ + velocities_[0] * tc;
  for (std::size_t j = 0; j < corner_times_.size(); ++j) {
    p += (velocities_[j + 1] - velocities_[j]) * blended_ramp(tc - corner_times_[j], blend_);
  }
  out.position = p;
  return out;
}

Eigen::Vector3d RasterSweep::velocity(double t) const {
  if (empty()) return Eigen::Vector3d::Zero();
  const double tc = std::clamp(t, 0.0, duration());
  Eigen::Vector3d v = velocities_[0];
  for (std::size_t j = 0; j < corner_times_.size(); ++j) {
    v += (velocities_[j + 1] - velocities_[j]) * blended_step(tc - corner_times_[j], blend_);
  }
  return v;
}

namespace {

struct Legs {
  std::vector<Eigen::Vector3d> velocity;
  std::vector<double> duration;
};

// Legs of face `face` (0-based), rotated into place, followed by a wait until
// the edge ends.
void append_face(Legs& legs, int face, const SweepSpec& spec, double edge_time) {
  const double ang = face * kPi / 2.0;
  const Eigen::Vector2d along = rotate({1.0, 0.0}, ang);
  const bool downward = face % 2 == 0;
  const double v = spec.speed;
  for (int k = 0; k < spec.passes; ++k) {
    const double dir = (k % 2 == 0) ? 1.0 : -1.0;
    legs.velocity.emplace_back(dir * v * along.x(), dir * v * along.y(), 0.0);
    legs.duration.push_back(spec.horizontal_span / v);
    if (k + 1 < spec.passes) {
      const double step = spec.vertical_span / (spec.passes - 1);
      legs.velocity.emplace_back(0.0, 0.0, downward ? -v : v);
      legs.duration.push_back(step / v);
    }
  }
  const double wait = edge_time - spec.face_length() / v;
  if (wait > kDeadlineSlack) {
    legs.velocity.emplace_back(0.0, 0.0, 0.0);
    legs.duration.push_back(wait);
  }
}

Eigen::Vector3d face_start(int face, const SweepSpec& spec) {
  const double c = spec.horizontal_span / 2.0;
  const Eigen::Vector2d xy = rotate({-c, -c}, face * kPi / 2.0);
  double z = spec.center_height;
  if (spec.passes > 1) z += (face % 2 == 0 ? 0.5 : -0.5) * spec.vertical_span;
  return {xy.x(), xy.y(), z};
}

void check_deadline(const SweepSpec& spec, double edge_time) {
  spec.validate();
  const double face_time = spec.face_length() / spec.speed;
  if (face_time > edge_time + kDeadlineSlack) {
    std::ostringstream os;
    os << "sweep takes " << face_time << " s but the chassis reaches the next K point after " << edge_time
       << " s";
    throw InfeasibleSweep(os.str());
  }
}

}  // namespace

RasterSweep build_sweep(int edge, const SweepSpec& spec, double edge_time) {
  if (edge < 1 || edge > 4) throw std::out_of_range("sweep edge must be 1..4");
  check_deadline(spec, edge_time);
  if (spec.passes == 0) return {};
  Legs legs;
  append_face(legs, edge - 1, spec, edge_time);
  return RasterSweep(legs.velocity, legs.duration, face_start(edge - 1, spec), spec.corner_blend, spec.pitch);
}

RasterSweep build_stage_one_sweep(const SweepSpec& spec, double edge_time) {
  check_deadline(spec, edge_time);
  if (spec.passes == 0) return {};
  Legs legs;
  for (int face = 0; face < 4; ++face) append_face(legs, face, spec, edge_time);
  return RasterSweep(legs.velocity, legs.duration, face_start(0, spec), spec.corner_blend, spec.pitch);
}

// ---------------------------------------------------------------------------
// Residual fires
// ---------------------------------------------------------------------------

std::string group_label(int group) {
  return "A" + std::to_string(2 * group - 1) + "A" + std::to_string(2 * group);
}

StopPlan assign_fires(const std::vector<FireSpot>& fires, const Circuit& circuit) {
  StopPlan plan;
  const auto& a = circuit.a_points();
  const double lap = circuit.lap_length();
  for (std::size_t i = 0; i < fires.size(); ++i) {
    const Eigen::Vector2d f = fires[i].position.head<2>();
    int best = 0;
    double best_d = (a[0].position - f).squaredNorm();
    for (int j = 1; j < 8; ++j) {
      const double d = (a[j].position - f).squaredNorm();
      if (d < best_d) {  // strict: ties stay with the lower index
        best_d = d;
        best = j;
      }
    }
    Stop stop;
    stop.fire = i;
    stop.nearest_a = best + 1;
    stop.group = best / 2 + 1;
    const auto st = circuit.straight(stop.group);
    const double u = std::clamp((f - st.start).dot(st.direction), 0.0, circuit.straight_length());
    stop.s = std::fmod(st.s_start + u, lap);
    stop.pose = circuit.at(stop.s).pose;
    plan.stops.push_back(stop);
  }
  std::stable_sort(plan.stops.begin(), plan.stops.end(), [](const Stop& x, const Stop& y) {
    return x.s < y.s || (x.s == y.s && x.fire < y.fire);
  });
  return plan;
}

Dispatch dispatch(const StopPlan& plan, const std::vector<FireSpot>& fires, const Circuit& circuit,
                  const ArmSetup& arm, const StageTwoSpec& stage2, double budget) {
  Dispatch out;
  struct Served {
    std::size_t stop;
    kinematics::JointAngles q;
    double s_from, s_to;
  };
  std::vector<Served> served;
  double s_prev = 0.0;  // K5 sits at the start of the lap
  for (std::size_t i = 0; i < plan.stops.size(); ++i) {
    const auto& stop = plan.stops[i];
    const auto& fire = fires.at(stop.fire);
    try {
      const auto q = arm::solve_target(arm.arm, arm.tool, arm.mount, stop.pose,
                                       {fire.position, stage2.spray_pitch});
      served.push_back({i, q, s_prev, stop.s});
      s_prev = stop.s;
    } catch (const kinematics::KinematicsError& e) {
      out.flagged.push_back({fire.id, e.what()});
    }
  }
  if (served.empty()) return out;

  const double speed = circuit.spec().speed;
  for (const auto& s : served) out.drive_time += (s.s_to - s.s_from) / speed;
  out.dwell = (budget - out.drive_time) / static_cast<double>(served.size());

  for (const auto& s : served) {
    const double drive = (s.s_to - s.s_from) / speed;
    // The arm moves while the chassis drives; a short drive eats into the dwell.
    const double spray_floor = stage2.min_dwell + std::max(0.0, stage2.min_transition - drive);
    Command d;
    d.kind = Command::Kind::drive;
    d.drive = {s.stop, s.s_from, s.s_to, drive};
    out.commands.push_back(d);
    Command r;
    r.kind = Command::Kind::reach_and_spray;
    r.spray = {s.stop, fires.at(plan.stops[s.stop].fire).id, s.q, std::max(out.dwell, spray_floor)};
    out.commands.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// State machine
// ---------------------------------------------------------------------------

std::string MissionState::label() const {
  switch (phase) {
    case Phase::home: return "Home";
    case Phase::stage1: return "StageI:" + std::to_string(index) + (sub == SubPhase::sweep ? ":sweep" : ":transit");
    case Phase::top_spray: return "TopSpray";
    case Phase::stage2: return "StageII:" + std::to_string(index) + (sub == SubPhase::drive ? ":drive" : ":spray");
    case Phase::end: return "End";
  }
  return "?";
}

const char* to_string(MissionEvent e) {
  switch (e) {
    case MissionEvent::start: return "start";
    case MissionEvent::sweep_complete: return "sweep_complete";
    case MissionEvent::edge_complete: return "edge_complete";
    case MissionEvent::top_spray_complete: return "top_spray_complete";
    case MissionEvent::arrived_at_stop: return "arrived_at_stop";
    case MissionEvent::spray_complete: return "spray_complete";
  }
  return "?";
}

MissionState mission_step(const MissionState& s, MissionEvent e, const MissionContext& ctx) {
  using P = Phase;
  using S = SubPhase;
  switch (s.phase) {
    case P::home:
      if (e == MissionEvent::start) return {P::stage1, 1, S::sweep};
      break;
    case P::stage1:
      if (s.sub == S::sweep && e == MissionEvent::sweep_complete) return {P::stage1, s.index, S::transit};
      if (s.sub == S::transit && e == MissionEvent::edge_complete) {
        if (s.index < ctx.edges) return {P::stage1, s.index + 1, S::sweep};
        return {P::top_spray, 0, S::none};
      }
      break;
    case P::top_spray:
      if (e == MissionEvent::top_spray_complete) {
        if (ctx.stops > 0) return {P::stage2, 1, S::drive};
        return {P::end, 0, S::none};
      }
      break;
    case P::stage2:
      if (s.sub == S::drive && e == MissionEvent::arrived_at_stop) return {P::stage2, s.index, S::spray};
      if (s.sub == S::spray && e == MissionEvent::spray_complete) {
        if (s.index < ctx.stops) return {P::stage2, s.index + 1, S::drive};
        return {P::end, 0, S::none};
      }
      break;
    case P::end: break;
  }
  throw IllegalTransition("no transition from " + s.label() + " on " + to_string(e));
}

// ---------------------------------------------------------------------------
// Mission plan
// ---------------------------------------------------------------------------

std::size_t to_step(double t, double dt) {
  if (!(t >= 0.0)) throw std::invalid_argument("negative time on the grid");
  return static_cast<std::size_t>(std::llround(t / dt));
}

MissionState MissionPlan::state_at(std::size_t k) const {
  if (k >= final_step) return {Phase::end, 0, SubPhase::none};
  for (const auto& p : phases) {
    if (k >= p.k0 && k < p.k1) return p.state;
  }
  return {Phase::end, 0, SubPhase::none};
}

MissionPlan plan_mission(const MissionInputs& in) {
  if (!(in.dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  in.fire_test.validate();
  in.stage2.validate();
  in.top_spray.validate();

  Circuit circuit(in.circuit);
  const double edge_time = circuit.edge_time();
  RasterSweep sweep = build_stage_one_sweep(in.sweep, edge_time);
  const double face_time = in.sweep.face_length() / in.sweep.speed;

  MissionPlan plan{circuit, ChassisTrajectory(circuit, in.chassis_l), sweep, {}, {}, {}, {}, in.dt, 0, 0, 0, {}};
  const double dt = in.dt;
  const double lap = circuit.lap_length();

  // Stage I: one lap at constant speed.
  // Pieces end on grid times so a sample never lands on the wrong side of a
  // boundary through rounding.
  plan.stage1_end = to_step(4.0 * edge_time, dt);
  const double t1 = static_cast<double>(plan.stage1_end) * dt;
  plan.chassis.add(0.0, t1, 0.0, in.circuit.speed);

  // Stage I must stay inside the arm workspace for every grid sample.
  for (std::size_t k = 0; k <= plan.stage1_end && !sweep.empty(); ++k) {
    const double t = static_cast<double>(k) * dt;
    try {
      (void)arm::solve_target(in.arm.arm, in.arm.tool, in.arm.mount, plan.chassis.sample(t).pose, sweep.target(t));
    } catch (const kinematics::KinematicsError& e) {
      const int edge = std::min(4, 1 + static_cast<int>(t / edge_time));
      std::ostringstream os;
      os << "edge " << edge << " at t = " << t << " s leaves the arm workspace: " << e.what();
      throw InfeasibleSweep(os.str());
    }
  }

  // Residual fires.
  plan.stops = assign_fires(in.fires, circuit);
  plan.commands = dispatch(plan.stops, in.fires, circuit, in.arm, in.stage2, in.fire_test.stage2_budget);
  const int n_legs = static_cast<int>(plan.commands.commands.size() / 2);

  const MissionContext ctx{4, n_legs};
  MissionState state;
  auto add_phase = [&](MissionEvent e, std::size_t k0) {
    state = mission_step(state, e, ctx);
    if (!plan.phases.empty()) plan.phases.back().k1 = k0;
    plan.phases.push_back({state, k0, k0});
  };
  auto mark = [&](std::size_t k, std::string label) { plan.markers.push_back({k, std::move(label)}); };

  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, in.fire_test.discharge_time);
  mark(0, "discharge_time=" + std::string(buf, res.ptr));
  add_phase(MissionEvent::start, 0);
  for (int edge = 1; edge <= 4; ++edge) {
    const std::size_t k0 = to_step((edge - 1) * edge_time, dt);
    const std::size_t ks = to_step((edge - 1) * edge_time + face_time, dt);
    const std::size_t k1 = to_step(edge * edge_time, dt);
    mark(k0, "K" + std::to_string(edge));
    mark(k0, "sweep_start:" + std::to_string(edge));
    add_phase(MissionEvent::sweep_complete, std::min(ks, k1));
    mark(std::min(ks, k1), "sweep_end:" + std::to_string(edge));
    add_phase(MissionEvent::edge_complete, k1);
  }
  mark(plan.stage1_end, "K5");
  for (const auto& a : circuit.a_points()) mark(to_step(a.s / in.circuit.speed, dt), a.name);

  // Top spray at K5.
  const std::size_t k_top0 = plan.stage1_end;
  plan.top_spray_end = k_top0 + to_step(in.top_spray.duration, dt);
  plan.chassis.add(t1, static_cast<double>(plan.top_spray_end) * dt, lap, 0.0);
  mark(k_top0, "top_spray_start");
  mark(plan.top_spray_end, "top_spray_end");
  add_phase(MissionEvent::top_spray_complete, plan.top_spray_end);

  // Stage II legs. Boundaries are snapped from cumulative times so the
  // stage length equals the budget on the grid.
  std::size_t k_end = plan.top_spray_end;
  if (n_legs > 0) {
    mark(plan.top_spray_end, "stage2_start");
    double cumulative = 0.0;
    std::size_t k_leg = plan.top_spray_end;
    for (int leg = 0; leg < n_legs; ++leg) {
      const auto& drive = plan.commands.commands[2 * leg].drive;
      const auto& spray = plan.commands.commands[2 * leg + 1].spray;
      const std::size_t k_arrive = plan.top_spray_end + to_step(cumulative + drive.duration, dt);
      cumulative += drive.duration + spray.dwell;
      const std::size_t k_done = plan.top_spray_end + to_step(cumulative, dt);

      const double ta = static_cast<double>(k_leg) * dt, tb = static_cast<double>(k_arrive) * dt;
      if (k_arrive > k_leg) {
        plan.chassis.add(ta, tb, lap + drive.s_from, (drive.s_to - drive.s_from) / (tb - ta));
      }
      plan.chassis.add(tb, static_cast<double>(k_done) * dt, lap + drive.s_to, 0.0);

      const std::string n = std::to_string(leg + 1);
      mark(k_leg, "drive_start:" + n);
      mark(k_arrive, "C" + n);
      mark(k_arrive, "spray_start:" + n);
      mark(k_done, "spray_end:" + n);
      add_phase(MissionEvent::arrived_at_stop, k_arrive);
      add_phase(MissionEvent::spray_complete, k_done);
      plan.legs.push_back({k_leg, k_arrive, k_done, static_cast<std::size_t>(2 * leg + 1)});
      k_leg = k_done;
    }
    k_end = k_leg;
    mark(k_end, "stage2_end");
  }
  plan.phases.back().k1 = k_end + 1;  // End occupies the final sample
  plan.final_step = k_end;
  mark(k_end, "End");

  // Hold the chassis after the mission ends.
  const double t_end = static_cast<double>(k_end) * dt;
  plan.chassis.add(t_end, t_end, plan.chassis.path_parameter(t_end), 0.0);

  std::stable_sort(plan.markers.begin(), plan.markers.end(),
                   [](const Marker& a, const Marker& b) { return a.k < b.k; });
  return plan;
}

}  // namespace firebot::mission
