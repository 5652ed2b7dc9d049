#include "firebot/kinematics.hpp"

#include "firebot/units.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace firebot::kinematics {

DHTable DHTable::defaults() {
  DHTable t;
  t.rows = {{
      {100.0, deg2rad(90.0), 185.0, 1},
      {1000.0, 0.0, 0.0, 2},
      {1700.0, 0.0, 0.0, 3},
      {100.0, 0.0, 0.0, 0},
      {80.0, 0.0, 0.0, 4},
  }};
  return t;
}

void DHTable::validate() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!(r.a >= 0.0) || !(r.d >= 0.0) || !std::isfinite(r.a) || !std::isfinite(r.d)) {
      throw std::invalid_argument("dh row " + std::to_string(i + 1) + ": a and d must be finite and >= 0");
    }
    if (r.joint < 0 || r.joint > 4) {
      throw std::invalid_argument("dh row " + std::to_string(i + 1) + ": joint index must be 0..4");
    }
  }
  if (rows[3].joint != 0) throw std::invalid_argument("dh row 4: theta must be fixed at 0");
  if (a(2) <= 0.0 || a(3) <= 0.0) throw std::invalid_argument("dh: a2 and a3 must be positive");
}

JointLimits JointLimits::defaults() {
  JointLimits l;
  l.lower = {deg2rad(-180.0), deg2rad(0.0), deg2rad(-120.0), deg2rad(-90.0)};
  l.upper = {deg2rad(180.0), deg2rad(135.0), deg2rad(15.5), deg2rad(0.0)};
  l.interior_min = deg2rad(30.0);
  l.interior_max = deg2rad(165.0);
  return l;
}

double EndEffectorPose::radius() const { return std::hypot(x, y); }

double interior_angle(const JointAngles& q) { return kPi - (q.theta2 - q.theta3); }

std::string limit_violation(const JointAngles& q, const JointLimits& limits) {
  const std::array<double, 4> v{q.theta1, q.theta2, q.theta3, q.theta4};
  for (int i = 0; i < 4; ++i) {
    if (!std::isfinite(v[i]) || v[i] < limits.lower[i] || v[i] > limits.upper[i]) {
      std::ostringstream os;
      os << "theta" << (i + 1) << " = " << rad2deg(v[i]) << " deg outside [" << rad2deg(limits.lower[i])
         << ", " << rad2deg(limits.upper[i]) << "]";
      return os.str();
    }
  }
  const double inner = interior_angle(q);
  if (inner < limits.interior_min || inner > limits.interior_max) {
    std::ostringstream os;
    os << "link 2/3 interior angle " << rad2deg(inner) << " deg outside [" << rad2deg(limits.interior_min)
       << ", " << rad2deg(limits.interior_max) << "]";
    return os.str();
  }
  return {};
}

bool within_limits(const JointAngles& q, const JointLimits& limits) {
  return limit_violation(q, limits).empty();
}

Eigen::Matrix4d dh_transform(const DHRow& row, double theta) {
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
  Eigen::Matrix4d t;
  t << ct, -st * ca, st * sa, row.a * ct,
       st, ct * ca, -ct * sa, row.a * st,
       0.0, sa, ca, row.d,
       0.0, 0.0, 0.0, 1.0;
  return t;
}

Eigen::Matrix4d chain_transform(const DHTable& table, const JointAngles& q) {
  // Relative rotations that reproduce the absolute link angles.
  const std::array<double, 5> relative{q.theta1, q.theta2, q.theta3 - q.theta2, -q.theta3, q.theta4};
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (std::size_t i = 0; i < table.rows.size(); ++i) t = t * dh_transform(table.rows[i], relative[i]);
  return t;
}

EndEffectorPose forward_kinematics(const Manipulator& arm, const JointAngles& q, const ToolOffset& tool,
                                   LimitCheck check) {
  if (check == LimitCheck::enforce) {
    if (auto why = limit_violation(q, arm.limits); !why.empty()) throw JointLimitError(why);
  }
  const auto& t = arm.table;
  const double s4 = std::sin(q.theta4), c4 = std::cos(q.theta4);
  const double r = t.a(1) + t.a(2) * std::cos(q.theta2) + t.a(3) * std::cos(q.theta3) + t.a(4) +
                   t.a(5) * c4 - tool.y5p * s4;
  const double z = t.d(1) + t.a(2) * std::sin(q.theta2) + t.a(3) * std::sin(q.theta3) + t.a(5) * s4 +
                   tool.y5p * c4;
  return {r * std::cos(q.theta1), r * std::sin(q.theta1), z, -q.theta4};
}

JointAngles inverse_kinematics(const Manipulator& arm, const EndEffectorPose& pose, const ToolOffset& tool) {
  if (!std::isfinite(pose.x) || !std::isfinite(pose.y) || !std::isfinite(pose.z) || !std::isfinite(pose.phi)) {
    throw UnreachableError("non-finite end-effector pose");
  }
  const auto& t = arm.table;
  const double a2 = t.a(2), a3 = t.a(3);

  JointAngles q;
  q.theta1 = std::atan2(pose.y, pose.x);
  q.theta4 = -pose.phi;
  const double s4 = std::sin(q.theta4), c4 = std::cos(q.theta4);

  const double dr3 = pose.radius() - t.a(1);
  const double dz3 = pose.z - t.d(1);
  const double dr2 = dr3 + tool.y5p * s4 - t.a(4) - t.a(5) * c4;
  const double dz2 = dz3 - t.a(5) * s4 - tool.y5p * c4;
  const double chord = std::hypot(dr2, dz2);
  if (chord == 0.0) throw UnreachableError("target coincides with the shoulder axis");

  double c_shoulder = (chord * chord + a2 * a2 - a3 * a3) / (2.0 * a2 * chord);
  double c_elbow = (chord * chord + a3 * a3 - a2 * a2) / (2.0 * a3 * chord);
  constexpr double kSlack = 1e-12;
  if (std::abs(c_shoulder) > 1.0 + kSlack || std::abs(c_elbow) > 1.0 + kSlack) {
    std::ostringstream os;
    os << "target chord " << chord << " mm outside [" << std::abs(a3 - a2) << ", " << a2 + a3 << "]";
    throw UnreachableError(os.str());
  }
  c_shoulder = std::clamp(c_shoulder, -1.0, 1.0);
  c_elbow = std::clamp(c_elbow, -1.0, 1.0);

  const double bearing = std::atan2(dz2, dr2);
  q.theta2 = std::acos(c_shoulder) + bearing;
  q.theta3 = -std::acos(c_elbow) + bearing;

  if (auto why = limit_violation(q, arm.limits); !why.empty()) throw JointLimitError(why);
  return q;
}

// ---------------------------------------------------------------------------

const char* to_string(BoundaryCurve c) {
  switch (c) {
    case BoundaryCurve::upper: return "upper";
    case BoundaryCurve::lower: return "lower";
    case BoundaryCurve::inner: return "inner";
    case BoundaryCurve::outer: return "outer";
  }
  return "?";
}

double chord_length(double a2, double a3, double interior) {
  return std::sqrt(a2 * a2 + a3 * a3 - 2.0 * a2 * a3 * std::cos(interior));
}

namespace {

// Inclusive samples of [lo, hi] no further apart than step.
std::vector<double> samples(double lo, double hi, double step) {
  if (hi < lo) return {};
  if (hi == lo) return {lo};
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step - 1e-12));
  std::vector<double> out(n + 1);
  for (std::size_t i = 0; i <= n; ++i) out[i] = (i == n) ? hi : lo + (hi - lo) * double(i) / double(n);
  return out;
}

// Admissible theta3 interval for a given theta2.
std::pair<double, double> theta3_range(const JointLimits& l, double theta2) {
  const double lo = std::max(l.lower[2], theta2 - (kPi - l.interior_min));
  const double hi = std::min(l.upper[2], theta2 - (kPi - l.interior_max));
  return {lo, hi};
}

}  // namespace

WorkspaceSummary workspace_analysis(const Manipulator& arm, const WorkspaceOptions& options) {
  if (!(options.joint_step > 0.0)) throw std::invalid_argument("workspace: resolution must be > 0");
  const auto& l = arm.limits;
  const double a2 = arm.table.a(2), a3 = arm.table.a(3);

  WorkspaceSummary out;
  out.r_min = std::numeric_limits<double>::infinity();
  out.r_max = -out.r_min;
  out.chain_r_min = out.r_min;
  out.chain_r_max = out.r_max;

  auto planar = [&](double t2, double t3) {
    const JointAngles q{0.0, t2, t3, options.wrist_angle};
    const auto p = forward_kinematics(arm, q, options.tool, LimitCheck::bypass);
    return std::pair{p.x, p.z};
  };

  const double azimuth_step = options.azimuth_step > 0.0 ? options.azimuth_step : 0.0;
  std::vector<double> azimuths;
  if (azimuth_step > 0.0) {
    for (double a = l.lower[0]; a < l.upper[0] - 1e-12; a += azimuth_step) azimuths.push_back(a);
  }

  for (double t2 : samples(l.lower[1], l.upper[1], options.joint_step)) {
    const auto [lo, hi] = theta3_range(l, t2);
    for (double t3 : samples(lo, hi, options.joint_step)) {
      const double chord = chord_length(a2, a3, kPi - (t2 - t3));
      out.r_min = std::min(out.r_min, chord);
      out.r_max = std::max(out.r_max, chord);
      const auto [r, z] = planar(t2, t3);
      out.chain_r_min = std::min(out.chain_r_min, r);
      out.chain_r_max = std::max(out.chain_r_max, r);
      ++out.grid_samples;
      for (double a : azimuths) out.cloud.emplace_back(r * std::cos(a), r * std::sin(a), z);
    }
  }

  auto push_curve = [&](BoundaryCurve c, double t2, double t3) {
    const auto [r, z] = planar(t2, t3);
    out.boundary.push_back({c, r, z});
  };
  for (double t2 : {l.upper[1], l.lower[1]}) {
    const auto curve = t2 == l.upper[1] ? BoundaryCurve::upper : BoundaryCurve::lower;
    const auto [lo, hi] = theta3_range(l, t2);
    for (double t3 : samples(lo, hi, options.joint_step)) push_curve(curve, t2, t3);
  }
  for (auto [curve, inner] : {std::pair{BoundaryCurve::inner, l.interior_min},
                              std::pair{BoundaryCurve::outer, l.interior_max}}) {
    // theta3 = theta2 - (pi - inner) must stay inside its own range.
    const double offset = kPi - inner;
    const double lo = std::max(l.lower[1], l.lower[2] + offset);
    const double hi = std::min(l.upper[1], l.upper[2] + offset);
    for (double t2 : samples(lo, hi, options.joint_step)) push_curve(curve, t2, t2 - offset);
  }

  for (const auto& p : options.check_points) {
    PointCheck check{p.name, true, {}};
    try {
      (void)inverse_kinematics(arm, p.pose, options.tool);
    } catch (const KinematicsError& e) {
      check.reachable = false;
      check.reason = e.what();
    }
    out.checks.push_back(std::move(check));
  }
  return out;
}

}  // namespace firebot::kinematics
