#include "firebot/chassis_control.hpp"

#include "firebot/units.hpp"

#include <cmath>
#include <sstream>

namespace firebot::chassis {

void ChassisGains::validate() const {
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("chassis.gains.") + key + " must be > 0");
  };
  auto non_negative = [](double v, const char* key) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("chassis.gains.") + key + " must be >= 0");
  };
  positive(k1, "k1");
  positive(k2, "k2");
  positive(k3, "k3");
  positive(Q1, "Q1");
  positive(Q2, "Q2");
  non_negative(fm1, "fm1");
  non_negative(fm2, "fm2");
  non_negative(surface_sign_width, "surface_sign_width");
  non_negative(switching_width, "switching_width");
  if (!std::isfinite(l)) throw std::invalid_argument("chassis.gains.l must be finite");
  if (!(P1 >= fm1)) throw std::invalid_argument("chassis.gains.P1 must be >= fm1");
  if (!(P2 >= fm2)) throw std::invalid_argument("chassis.gains.P2 must be >= fm2");
}

namespace {

struct Rotated {
  double x, y;
};

Rotated to_body(double phi, double dx, double dy) {
  const double c = std::cos(phi), s = std::sin(phi);
  return {c * dx + s * dy, -s * dx + c * dy};
}

double switch_fn(double s, const ChassisGains& g) {
  return g.switching == Switching::saturation ? saturate(s, g.switching_width) : sign(s);
}

}  // namespace

ChassisError tracking_error(const ChassisState& ref, const ChassisState& q, double l) {
  const double px_r = ref.x - l * std::sin(ref.phi), py_r = ref.y + l * std::cos(ref.phi);
  const double px = q.x - l * std::sin(q.phi), py = q.y + l * std::cos(q.phi);
  const auto b = to_body(q.phi, px_r - px, py_r - py);
  return {b.x, b.y, wrap_angle(ref.phi - q.phi)};
}

ChassisError error_rates(const ChassisError& e, const ChassisReferenceSample& ref, const ChassisState& q,
                         const ChassisVelocity& z, double l) {
  const auto c = to_body(q.phi, ref.vdx, ref.vdy);
  return {z.w * (e.e2 + l) + c.x - z.v, -z.w * e.e1 + c.y, ref.wd - z.w};
}

std::array<double, 2> chassis_sliding_surface(const ChassisError& e, const ChassisError& edot,
                                              const ChassisGains& g) {
  const double a = edot.e2 + g.k2 * e.e2;
  const double sigma = saturate(e.e1, g.surface_sign_width);
  return {edot.e1 + g.k1 * e.e1 + sigma * std::abs(a), edot.e3 + g.k3 * e.e3 + a};
}

ChassisControl chassis_control_law(const ChassisError& e, const ChassisError& edot,
                                   const ChassisReferenceSample& ref, const ChassisState& q,
                                   const ChassisVelocity& z, const ChassisGains& g) {
  ChassisControl out;
  out.s = chassis_sliding_surface(e, edot, g);
  out.reaching = {-g.Q1 * out.s[0] - g.P1 * switch_fn(out.s[0], g),
                  -g.Q2 * out.s[1] - g.P2 * switch_fn(out.s[1], g)};

  // Rate of the reference velocity seen in the body frame.
  const double c = std::cos(q.phi), sn = std::sin(q.phi), w = z.w;
  const double cx_dot = ref.vdx_dot * c - ref.vdx * w * sn + ref.vdy_dot * sn + ref.vdy * w * c;
  const double cy_dot = -ref.vdx_dot * sn - ref.vdx * w * c + ref.vdy_dot * c - ref.vdy * w * sn;

  const double a = edot.e2 + g.k2 * e.e2;
  const double sigma = saturate(e.e1, g.surface_sign_width);
  const double sigma_dot =
      (g.surface_sign_width > 0.0 && std::abs(e.e1) < g.surface_sign_width) ? edot.e1 / g.surface_sign_width : 0.0;

  // Yaw acceleration that puts s2' on the reaching law.
  const double w_dot =
      (ref.wd_dot + g.k3 * edot.e3 - w * edot.e1 + cy_dot + g.k2 * edot.e2 - out.reaching[1]) / (1.0 + e.e1);
  const double e2_ddot = -w_dot * e.e1 - w * edot.e1 + cy_dot;

  // Forward acceleration that does the same for s1.
  const double v_dot = w_dot * (e.e2 + g.l) + w * edot.e2 + cx_dot + g.k1 * edot.e1 + sigma_dot * std::abs(a) +
                       sigma * sign(a) * (e2_ddot + g.k2 * edot.e2) - out.reaching[0];

  out.v_dot = v_dot;
  out.w_dot = w_dot;
  out.u = {v_dot - ref.acc.v, w_dot - ref.acc.w};
  return out;
}

namespace {

void check_bounds(const std::array<double, 2>& f, const ChassisGains& g) {
  if (std::abs(f[0]) > g.fm1 || std::abs(f[1]) > g.fm2) {
    std::ostringstream os;
    os << "disturbance (" << f[0] << ", " << f[1] << ") exceeds bounds (" << g.fm1 << ", " << g.fm2 << ")";
    throw DisturbanceBoundViolation(os.str());
  }
}

}  // namespace

ChassisVelocity reduced_dynamics_step(const ChassisVelocity& z, const ChassisVelocity& zr_now,
                                      const ChassisVelocity& zr_next, const std::array<double, 2>& u,
                                      const std::array<double, 2>& f, const ChassisGains& g, double dt) {
  check_bounds(f, g);
  return {z.v + (zr_next.v - zr_now.v) + (u[0] - f[0]) * dt, z.w + (zr_next.w - zr_now.w) + (u[1] - f[1]) * dt};
}

ChassisState integrate_pose(const ChassisState& q, const ChassisVelocity& z, const ChassisVelocity& zr_now,
                            const ChassisVelocity& zr_mid, const ChassisVelocity& zr_next,
                            const std::array<double, 2>& u, const std::array<double, 2>& f, double dt,
                            Integrator method) {
  auto vel = [&](const ChassisVelocity& zr, double tau) {
    return ChassisVelocity{z.v + (zr.v - zr_now.v) + (u[0] - f[0]) * tau,
                           z.w + (zr.w - zr_now.w) + (u[1] - f[1]) * tau};
  };
  auto deriv = [](const ChassisState& p, const ChassisVelocity& zz) {
    return ChassisState{zz.v * std::cos(p.phi), zz.v * std::sin(p.phi), zz.w};
  };
  auto axpy = [](const ChassisState& p, double h, const ChassisState& d) {
    return ChassisState{p.x + h * d.x, p.y + h * d.y, p.phi + h * d.phi};
  };

  ChassisState out;
  if (method == Integrator::euler) {
    out = axpy(q, dt, deriv(q, z));
  } else {
    const auto v0 = vel(zr_now, 0.0), vm = vel(zr_mid, 0.5 * dt), v1 = vel(zr_next, dt);
    const auto k1 = deriv(q, v0);
    const auto k2 = deriv(axpy(q, 0.5 * dt, k1), vm);
    const auto k3 = deriv(axpy(q, 0.5 * dt, k2), vm);
    const auto k4 = deriv(axpy(q, dt, k3), v1);
    out = {q.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
           q.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
           q.phi + dt / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi)};
  }
  out.phi = wrap_angle(out.phi);
  return out;
}

std::array<double, 2> track_speeds(const ChassisVelocity& z, double track_width) {
  return {z.v - z.w * track_width / 2.0, z.v + z.w * track_width / 2.0};
}

// ---------------------------------------------------------------------------

Disturbance::Disturbance(const DisturbanceSpec& spec) : spec_(spec), rng_(spec.seed) {}

double Disturbance::uniform() {
  // Top 53 bits to [0, 1); avoids implementation-defined distributions.
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

std::array<double, 2> Disturbance::next(double t) {
  switch (spec_.kind) {
    case DisturbanceKind::none: return {0.0, 0.0};
    case DisturbanceKind::constant: return spec_.amplitude;
    case DisturbanceKind::sinusoid: {
      const double s = std::sin(2.0 * kPi * spec_.frequency * t);
      return {spec_.amplitude[0] * s, spec_.amplitude[1] * s};
    }
    case DisturbanceKind::noise: {
      const double a = (2.0 * uniform() - 1.0) * spec_.amplitude[0];
      const double b = (2.0 * uniform() - 1.0) * spec_.amplitude[1];
      return {a, b};
    }
  }
  return {0.0, 0.0};
}

const char* to_string(DisturbanceKind k) {
  switch (k) {
    case DisturbanceKind::none: return "none";
    case DisturbanceKind::constant: return "constant";
    case DisturbanceKind::sinusoid: return "sinusoid";
    case DisturbanceKind::noise: return "noise";
  }
  return "none";
}

DisturbanceKind disturbance_kind_from(const std::string& s) {
  if (s == "none") return DisturbanceKind::none;
  if (s == "constant") return DisturbanceKind::constant;
  if (s == "sinusoid") return DisturbanceKind::sinusoid;
  if (s == "noise") return DisturbanceKind::noise;
  throw std::invalid_argument("disturbance.kind must be one of none, constant, sinusoid, noise");
}

}  // namespace firebot::chassis
