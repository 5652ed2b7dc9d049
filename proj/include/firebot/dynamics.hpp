#pragma once

#include "firebot/kinematics.hpp"
#include "firebot/units.hpp"

#include <Eigen/Dense>

#include <array>
#include <stdexcept>

namespace firebot::dynamics {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

/// Inertial description of one link.
///
/// Link 1 is the turret: only its rotary inertia about the vertical axis
/// matters. Links 2..4 are slender rods lying in the arm plane; com is the
/// distance of the centre of mass from the link's proximal joint and inertia
/// is the centroidal moment about an axis perpendicular to the rod. Link 4
/// is the wrist segment a5 that turns with theta4.
struct LinkParams {
  double mass = 0.0;     // kg
  double com = 0.0;      // mm
  double inertia = 0.0;  // kg m^2

  bool operator==(const LinkParams&) const = default;
};

struct LinkInertialParams {
  std::array<LinkParams, 4> links{};
  double payload = 0.0;  // kg, point mass at the tool point
  double gravity = kGravity;
  std::array<double, 4> viscous{};  // N m s, optional joint damping used by the plant

  static constexpr double kMaxPayload = 20.0;

  /// Uniform slender rods, masses proportional to link length, centre of
  /// mass at mid-link, payload at the tool.
  static LinkInertialParams uniform_rods(const kinematics::DHTable& table, double total_mass,
                                         double payload);
  void validate() const;  // throws std::invalid_argument

  bool operator==(const LinkInertialParams&) const = default;
};

/// Everything needed to evaluate the equations of motion.
struct ArmModel {
  kinematics::Manipulator arm;
  kinematics::ToolOffset tool;
  LinkInertialParams inertia;
};

struct DynamicsTerms {
  Mat4 M;
  Mat4 C;
  Vec4 G;
};

class SolveFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double kinetic_energy(const ArmModel& model, const Vec4& q, const Vec4& qd);
double potential_energy(const ArmModel& model, const Vec4& q);

Mat4 mass_matrix(const ArmModel& model, const Vec4& q);

/// dM/dq_i for i = 0..3 (analytic).
std::array<Mat4, 4> mass_matrix_partials(const ArmModel& model, const Vec4& q);

/// Coriolis matrix from Christoffel symbols of the first kind.
Mat4 coriolis_matrix(const ArmModel& model, const Vec4& q, const Vec4& qd);

Vec4 gravity_vector(const ArmModel& model, const Vec4& q);

DynamicsTerms evaluate(const ArmModel& model, const Vec4& q, const Vec4& qd);

/// M q'' + C q' + G.
Vec4 inverse_dynamics(const ArmModel& model, const Vec4& q, const Vec4& qd, const Vec4& qdd);

/// q'' = M^-1 (Q - C q' - G). Throws SolveFailure when M is not positive definite.
Vec4 forward_dynamics(const ArmModel& model, const Vec4& q, const Vec4& qd, const Vec4& torque);

}  // namespace firebot::dynamics
