#include "firebot/arm_control.hpp"

#include "firebot/units.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace firebot::arm {

void ArmGains::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("arm.gains.lambda must be > 0");
  for (double k : K) {
    if (!(k >= 0.0) || !std::isfinite(k)) throw std::invalid_argument("arm.gains.K entries must be >= 0");
  }
  if (!(boundary_layer >= 0.0)) throw std::invalid_argument("arm.gains.boundary_layer must be >= 0");
}

ReferenceUnreachable::ReferenceUnreachable(std::size_t i, const std::string& what)
    : kinematics::UnreachableError("sample " + std::to_string(i) + ": " + what), index(i) {}

ReferenceLimitViolation::ReferenceLimitViolation(std::size_t i, const std::string& what)
    : kinematics::JointLimitError("sample " + std::to_string(i) + ": " + what), index(i) {}

Eigen::Vector3d to_base_frame(const chassis::ChassisState& c, const ArmMount& mount,
                              const Eigen::Vector3d& global_m) {
  const double cs = std::cos(c.phi), sn = std::sin(c.phi);
  const double bx = c.x + cs * mount.x - sn * mount.y;
  const double by = c.y + sn * mount.x + cs * mount.y;
  const double dx = global_m.x() - bx, dy = global_m.y() - by;
  return {m2mm(cs * dx + sn * dy), m2mm(-sn * dx + cs * dy), m2mm(global_m.z() - mount.z)};
}

Eigen::Vector3d tool_position(const kinematics::Manipulator& arm, const kinematics::ToolOffset& tool,
                              const ArmMount& mount, const chassis::ChassisState& c, const Vec4& q) {
  const auto p = kinematics::forward_kinematics(arm, kinematics::JointAngles::from(q), tool,
                                                kinematics::LimitCheck::bypass);
  const double cs = std::cos(c.phi), sn = std::sin(c.phi);
  const double lx = mount.x + mm2m(p.x), ly = mount.y + mm2m(p.y);
  return {c.x + cs * lx - sn * ly, c.y + sn * lx + cs * ly, mount.z + mm2m(p.z)};
}

kinematics::JointAngles solve_target(const kinematics::Manipulator& arm, const kinematics::ToolOffset& tool,
                                     const ArmMount& mount, const chassis::ChassisState& c,
                                     const GlobalTarget& target) {
  const Eigen::Vector3d b = to_base_frame(c, mount, target.position);
  return kinematics::inverse_kinematics(arm, {b.x(), b.y(), b.z(), target.pitch}, tool);
}

std::vector<Vec4> solve_series(const kinematics::Manipulator& arm, const kinematics::ToolOffset& tool,
                               const ArmMount& mount, const std::vector<chassis::ChassisState>& chassis,
                               const std::vector<GlobalTarget>& targets, std::size_t index_offset) {
  if (chassis.size() != targets.size()) {
    throw std::invalid_argument("arm reference: chassis and target series differ in length");
  }
  std::vector<Vec4> q(targets.size());
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const std::size_t index = k + index_offset;
    try {
      q[k] = solve_target(arm, tool, mount, chassis[k], targets[k]).vector();
    } catch (const kinematics::UnreachableError& e) {
      throw ReferenceUnreachable(index, e.what());
    } catch (const kinematics::JointLimitError& e) {
      throw ReferenceLimitViolation(index, e.what());
    }
    if (k > 0) {
      q[k][0] = q[k - 1][0] + wrap_angle(q[k][0] - q[k - 1][0]);
      if (q[k][0] < arm.limits.lower[0] || q[k][0] > arm.limits.upper[0]) {
        throw ReferenceLimitViolation(index, "theta1 leaves its range while unwrapping");
      }
    }
  }
  return q;
}

ArmReference differentiate(const std::vector<Vec4>& q, double dt) {
  ArmReference ref;
  ref.dt = dt;
  const std::size_t n = q.size();
  ref.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) ref.samples[k].q = q[k];
  if (n < 3) return ref;  // too short to differentiate; derivatives stay zero

  const double h = dt, h2 = dt * dt;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    ref.samples[k].qd = (q[k + 1] - q[k - 1]) / (2.0 * h);
    ref.samples[k].qdd = (q[k + 1] - 2.0 * q[k] + q[k - 1]) / h2;
  }
  // Written in differences so a constant series gives exact zeros.
  auto d = [&](std::size_t a, std::size_t b) -> Vec4 { return q[a] - q[b]; };
  ref.samples[0].qd = (4.0 * d(1, 0) - d(2, 0)) / (2.0 * h);
  ref.samples[n - 1].qd = (4.0 * d(n - 1, n - 2) - d(n - 1, n - 3)) / (2.0 * h);
  if (n >= 4) {
    ref.samples[0].qdd = (-5.0 * d(1, 0) + 4.0 * d(2, 0) - d(3, 0)) / h2;
    ref.samples[n - 1].qdd = (-5.0 * d(n - 2, n - 1) + 4.0 * d(n - 3, n - 1) - d(n - 4, n - 1)) / h2;
  } else {
    ref.samples[0].qdd = ref.samples[1].qdd;
    ref.samples[n - 1].qdd = ref.samples[1].qdd;
  }
  return ref;
}

ArmReference build_arm_reference(const kinematics::Manipulator& arm, const kinematics::ToolOffset& tool,
                                 const ArmMount& mount, const std::vector<chassis::ChassisState>& chassis,
                                 const std::vector<GlobalTarget>& targets, double dt) {
  return differentiate(solve_series(arm, tool, mount, chassis, targets), dt);
}

Vec4 sliding_surface(const Vec4& e, const Vec4& edot, const ArmGains& gains) { return edot + gains.lambda * e; }

ArmControl arm_control_law(const dynamics::ArmModel& model, const Vec4& q, const Vec4& qd,
                           const ArmReferenceSample& ref, const ArmGains& gains) {
  ArmControl out;
  out.e = ref.q - q;
  out.edot = ref.qd - qd;
  out.s = sliding_surface(out.e, out.edot, gains);

  Vec4 sw;
  for (int i = 0; i < 4; ++i) sw[i] = gains.K[i] * saturate(out.s[i], gains.boundary_layer);

  const auto t = dynamics::evaluate(model, q, qd);
  out.torque = t.M * (ref.qdd + gains.lambda * out.edot + sw) + t.G + t.C * qd;
  return out;
}

QuinticSegment::QuinticSegment(const ArmReferenceSample& a, const ArmReferenceSample& b, double T)
    : duration_(T) {
  if (!(T > 0.0)) throw std::invalid_argument("quintic segment needs a positive duration");
  const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
  const Vec4 dq = b.q - a.q - a.qd * T - 0.5 * a.qdd * T2;
  const Vec4 dv = b.qd - a.qd - a.qdd * T;
  const Vec4 da = b.qdd - a.qdd;
  c_[0] = a.q;
  c_[1] = a.qd;
  c_[2] = 0.5 * a.qdd;
  c_[3] = (10.0 * dq - 4.0 * dv * T + 0.5 * da * T2) / T3;
  c_[4] = (-15.0 * dq + 7.0 * dv * T - da * T2) / T4;
  c_[5] = (6.0 * dq - 3.0 * dv * T + 0.5 * da * T2) / T5;
}

ArmReferenceSample QuinticSegment::at(double tau) const {
  const double t = std::clamp(tau, 0.0, duration_);
  ArmReferenceSample s;
  s.q = c_[0] + t * (c_[1] + t * (c_[2] + t * (c_[3] + t * (c_[4] + t * c_[5]))));
  s.qd = c_[1] + t * (2.0 * c_[2] + t * (3.0 * c_[3] + t * (4.0 * c_[4] + t * 5.0 * c_[5])));
  s.qdd = 2.0 * c_[2] + t * (6.0 * c_[3] + t * (12.0 * c_[4] + t * 20.0 * c_[5]));
  return s;
}

}  // namespace firebot::arm
