#pragma once

// Error-coordinate tracking controller for the tracked chassis.
//
// The controller tracks a point P offset by l to the left of the chassis
// centre. With l = 0 the error is the plain body-frame pose error. The plant
// is the reduced model z' - z_R' = u - f plus unicycle pose kinematics.

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace firebot::chassis {

struct ChassisState {
  double x = 0.0;    // m
  double y = 0.0;    // m
  double phi = 0.0;  // rad

  bool operator==(const ChassisState&) const = default;
};

struct ChassisVelocity {
  double v = 0.0;  // m/s
  double w = 0.0;  // rad/s

  bool operator==(const ChassisVelocity&) const = default;
};

/// Reference at one instant. vel/acc are z_R and its derivative; vdx..wd_dot
/// describe the motion of the tracked point in the global frame.
struct ChassisReferenceSample {
  ChassisState pose;
  ChassisVelocity vel;
  ChassisVelocity acc;
  double vdx = 0.0, vdy = 0.0;
  double vdx_dot = 0.0, vdy_dot = 0.0;
  double wd = 0.0, wd_dot = 0.0;
};

/// Same layout is used for the error and its rate.
struct ChassisError {
  double e1 = 0.0;
  double e2 = 0.0;
  double e3 = 0.0;
};

enum class Switching { sign, saturation };

struct ChassisGains {
  double k1 = 4.0, k2 = 100.0, k3 = 15.0;
  double Q1 = 20.0, Q2 = 20.0;
  double P1 = 0.2, P2 = 0.2;
  double l = 0.3;  // m, lateral offset of the tracked point
  double fm1 = 0.1, fm2 = 0.1;
  // Width of the ramp that replaces sgn(e1) inside the first surface. Zero
  // keeps the discontinuous sign.
  double surface_sign_width = 0.01;
  Switching switching = Switching::sign;
  double switching_width = 0.0;  // used when switching == saturation

  void validate() const;  // throws std::invalid_argument
  bool operator==(const ChassisGains&) const = default;
};

class DisturbanceBoundViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// e = T_z(phi) (P_R - P), e3 = wrap(phi_R - phi), P = CG + l * left(phi).
ChassisError tracking_error(const ChassisState& ref, const ChassisState& q, double l = 0.0);

/// Time derivative of tracking_error for the current motion.
ChassisError error_rates(const ChassisError& e, const ChassisReferenceSample& ref, const ChassisState& q,
                         const ChassisVelocity& z, double l);

std::array<double, 2> chassis_sliding_surface(const ChassisError& e, const ChassisError& edot,
                                              const ChassisGains& g);

struct ChassisControl {
  std::array<double, 2> u{};  // input to the reduced plant
  std::array<double, 2> s{};
  std::array<double, 2> reaching{};  // -Q s - P sw(s)
  double v_dot = 0.0;  // commanded chassis accelerations
  double w_dot = 0.0;
};

ChassisControl chassis_control_law(const ChassisError& e, const ChassisError& edot,
                                   const ChassisReferenceSample& ref, const ChassisState& q,
                                   const ChassisVelocity& z, const ChassisGains& g);

/// z(t + dt) for z' = z_R' + u - f with u and f held over the step.
ChassisVelocity reduced_dynamics_step(const ChassisVelocity& z, const ChassisVelocity& zr_now,
                                      const ChassisVelocity& zr_next, const std::array<double, 2>& u,
                                      const std::array<double, 2>& f, const ChassisGains& g, double dt);

/// Unicycle pose update. The velocity along the step is linear in tau apart
/// from the reference change, so the three reference samples suffice.
enum class Integrator { rk4, euler };
ChassisState integrate_pose(const ChassisState& q, const ChassisVelocity& z, const ChassisVelocity& zr_now,
                            const ChassisVelocity& zr_mid, const ChassisVelocity& zr_next,
                            const std::array<double, 2>& u, const std::array<double, 2>& f, double dt,
                            Integrator method);

/// Left and right track speeds for a track width b.
std::array<double, 2> track_speeds(const ChassisVelocity& z, double track_width);

// ---------------------------------------------------------------------------

enum class DisturbanceKind { none, constant, sinusoid, noise };

struct DisturbanceSpec {
  DisturbanceKind kind = DisturbanceKind::none;
  std::array<double, 2> amplitude{};
  double frequency = 1.0;  // Hz, sinusoid only
  std::uint64_t seed = 1;

  bool operator==(const DisturbanceSpec&) const = default;
};

/// Disturbance sampled once per step. Noise uses std::mt19937_64 with a fixed
/// 53-bit mantissa mapping so sequences are identical on every platform.
class Disturbance {
 public:
  explicit Disturbance(const DisturbanceSpec& spec);
  std::array<double, 2> next(double t);

 private:
  double uniform();

  DisturbanceSpec spec_;
  std::mt19937_64 rng_;
};

const char* to_string(DisturbanceKind k);
DisturbanceKind disturbance_kind_from(const std::string& s);

}  // namespace firebot::chassis
