#include "firebot/dynamics.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace firebot::dynamics {

LinkInertialParams LinkInertialParams::uniform_rods(const kinematics::DHTable& table, double total_mass,
                                                    double payload) {
  // Lengths used to apportion mass: turret column, upper arm, forearm, wrist.
  const std::array<double, 4> length_mm{table.a(1) + table.d(1), table.a(2), table.a(3),
                                        table.a(4) + table.a(5)};
  double sum = 0.0;
  for (double l : length_mm) sum += l;

  LinkInertialParams p;
  for (int i = 0; i < 4; ++i) {
    const double m = total_mass * length_mm[i] / sum;
    // The rod that actually turns: a2, a3, a5 for links 2..4.
    const double rod_mm = (i == 0) ? length_mm[0] : (i == 3 ? table.a(5) : length_mm[i]);
    const double rod = mm2m(rod_mm);
    p.links[i] = {m, i == 0 ? 0.0 : rod_mm / 2.0, m * rod * rod / 12.0};
  }
  p.payload = payload;
  return p;
}

void LinkInertialParams::validate() const {
  for (int i = 0; i < 4; ++i) {
    const auto& l = links[i];
    const std::string key = "inertia.links[" + std::to_string(i) + "]";
    if (!(l.mass > 0.0) || !std::isfinite(l.mass)) throw std::invalid_argument(key + ".mass_kg must be > 0");
    if (!(l.inertia > 0.0) || !std::isfinite(l.inertia)) {
      throw std::invalid_argument(key + ".inertia_kgm2 must be > 0");
    }
    if (!(l.com >= 0.0) || !std::isfinite(l.com)) throw std::invalid_argument(key + ".com_mm must be >= 0");
  }
  if (!(payload >= 0.0 && payload <= kMaxPayload)) {
    throw std::invalid_argument("inertia.payload_kg must be in [0, 20]");
  }
  if (!(gravity >= 0.0) || !std::isfinite(gravity)) throw std::invalid_argument("inertia.gravity must be >= 0");
  for (double b : viscous) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw std::invalid_argument("inertia.viscous must be >= 0");
  }
}

namespace {

// A point mass in the arm plane (r radial, z up). Its position is
//   (r0, z0) + sum_j along[j] * u(theta_j) + perp[j] * u_perp(theta_j)
// for j over theta2..theta4, with u = (cos, sin) and u_perp = (-sin, cos).
struct PlanarBody {
  double mass = 0.0;
  double r0 = 0.0;
  double z0 = 0.0;
  std::array<double, 3> along{};
  std::array<double, 3> perp{};
};

struct Geometry {
  std::vector<PlanarBody> bodies;
  std::array<double, 3> rod_inertia{};  // links 2..4
  double turret_inertia = 0.0;
};

Geometry geometry(const ArmModel& model) {
  const auto& t = model.arm.table;
  const auto& in = model.inertia;
  const double a1 = mm2m(t.a(1)), d1 = mm2m(t.d(1)), a2 = mm2m(t.a(2)), a3 = mm2m(t.a(3));
  const double a4 = mm2m(t.a(4)), a5 = mm2m(t.a(5)), y5p = mm2m(model.tool.y5p);

  Geometry g;
  g.turret_inertia = in.links[0].inertia;
  g.rod_inertia = {in.links[1].inertia, in.links[2].inertia, in.links[3].inertia};
  g.bodies = {
      {in.links[1].mass, a1, d1, {mm2m(in.links[1].com), 0.0, 0.0}, {}},
      {in.links[2].mass, a1, d1, {a2, mm2m(in.links[2].com), 0.0}, {}},
      {in.links[3].mass, a1 + a4, d1, {a2, a3, mm2m(in.links[3].com)}, {}},
      {in.payload, a1 + a4, d1, {a2, a3, a5}, {0.0, 0.0, y5p}},
  };
  return g;
}

using Vec2 = Eigen::Vector2d;

Vec2 u(double th) { return {std::cos(th), std::sin(th)}; }
Vec2 u_perp(double th) { return {-std::sin(th), std::cos(th)}; }

Vec2 position(const PlanarBody& b, const Vec4& q) {
  Vec2 p(b.r0, b.z0);
  for (int j = 0; j < 3; ++j) p += b.along[j] * u(q[j + 1]) + b.perp[j] * u_perp(q[j + 1]);
  return p;
}

// dp/dtheta_{j+2}
Vec2 column(const PlanarBody& b, const Vec4& q, int j) {
  return b.along[j] * u_perp(q[j + 1]) - b.perp[j] * u(q[j + 1]);
}

// d column(j) / dtheta_{j+2}; zero for any other joint.
Vec2 column_derivative(const PlanarBody& b, const Vec4& q, int j) {
  return -b.along[j] * u(q[j + 1]) - b.perp[j] * u_perp(q[j + 1]);
}

}  // namespace

double kinetic_energy(const ArmModel& model, const Vec4& q, const Vec4& qd) {
  const auto g = geometry(model);
  double k = 0.5 * g.turret_inertia * qd[0] * qd[0];
  for (const auto& b : g.bodies) {
    const Vec2 p = position(b, q);
    Vec2 v = Vec2::Zero();
    for (int j = 0; j < 3; ++j) v += column(b, q, j) * qd[j + 1];
    // In-plane velocity plus the out-of-plane component from turret rotation.
    k += 0.5 * b.mass * (v.squaredNorm() + p.x() * p.x() * qd[0] * qd[0]);
  }
  for (int j = 0; j < 3; ++j) {
    const double c = std::cos(q[j + 1]);
    k += 0.5 * g.rod_inertia[j] * (qd[j + 1] * qd[j + 1] + c * c * qd[0] * qd[0]);
  }
  return k;
}

double potential_energy(const ArmModel& model, const Vec4& q) {
  const auto g = geometry(model);
  double v = 0.0;
  for (const auto& b : g.bodies) v += b.mass * model.inertia.gravity * position(b, q).y();
  return v;
}

Mat4 mass_matrix(const ArmModel& model, const Vec4& q) {
  const auto g = geometry(model);
  Mat4 m = Mat4::Zero();
  m(0, 0) = g.turret_inertia;
  for (const auto& b : g.bodies) {
    const Vec2 p = position(b, q);
    m(0, 0) += b.mass * p.x() * p.x();
    std::array<Vec2, 3> w;
    for (int j = 0; j < 3; ++j) w[j] = column(b, q, j);
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) m(j + 1, k + 1) += b.mass * w[j].dot(w[k]);
    }
  }
  for (int j = 0; j < 3; ++j) {
    const double c = std::cos(q[j + 1]);
    m(0, 0) += g.rod_inertia[j] * c * c;
    m(j + 1, j + 1) += g.rod_inertia[j];
  }
  return m;
}

std::array<Mat4, 4> mass_matrix_partials(const ArmModel& model, const Vec4& q) {
  const auto g = geometry(model);
  std::array<Mat4, 4> dm;
  for (auto& d : dm) d.setZero();  // dM/dtheta1 stays zero

  for (const auto& b : g.bodies) {
    const Vec2 p = position(b, q);
    std::array<Vec2, 3> w, dw;
    for (int j = 0; j < 3; ++j) {
      w[j] = column(b, q, j);
      dw[j] = column_derivative(b, q, j);
    }
    for (int k = 0; k < 3; ++k) {
      Mat4& d = dm[k + 1];
      d(0, 0) += 2.0 * b.mass * p.x() * w[k].x();
      // Only column k depends on theta_k.
      for (int j = 0; j < 3; ++j) {
        const double term = b.mass * dw[k].dot(w[j]);
        d(k + 1, j + 1) += term;
        d(j + 1, k + 1) += term;
      }
    }
  }
  for (int j = 0; j < 3; ++j) {
    const double th = q[j + 1];
    dm[j + 1](0, 0) -= 2.0 * g.rod_inertia[j] * std::cos(th) * std::sin(th);
  }
  return dm;
}

Mat4 coriolis_matrix(const ArmModel& model, const Vec4& q, const Vec4& qd) {
  const auto dm = mass_matrix_partials(model, q);
  Mat4 c = Mat4::Zero();
  for (int k = 0; k < 4; ++k) {
    for (int j = 0; j < 4; ++j) {
      double sum = 0.0;
      for (int i = 0; i < 4; ++i) {
        sum += 0.5 * (dm[i](k, j) + dm[j](k, i) - dm[k](i, j)) * qd[i];
      }
      c(k, j) = sum;
    }
  }
  return c;
}

Vec4 gravity_vector(const ArmModel& model, const Vec4& q) {
  const auto g = geometry(model);
  Vec4 out = Vec4::Zero();
  for (const auto& b : g.bodies) {
    for (int j = 0; j < 3; ++j) out[j + 1] += b.mass * model.inertia.gravity * column(b, q, j).y();
  }
  return out;
}

DynamicsTerms evaluate(const ArmModel& model, const Vec4& q, const Vec4& qd) {
  return {mass_matrix(model, q), coriolis_matrix(model, q, qd), gravity_vector(model, q)};
}

Vec4 inverse_dynamics(const ArmModel& model, const Vec4& q, const Vec4& qd, const Vec4& qdd) {
  const auto t = evaluate(model, q, qd);
  return t.M * qdd + t.C * qd + t.G;
}

Vec4 forward_dynamics(const ArmModel& model, const Vec4& q, const Vec4& qd, const Vec4& torque) {
  const auto t = evaluate(model, q, qd);
  Eigen::LLT<Mat4> llt(t.M);
  if (llt.info() != Eigen::Success) {
    throw SolveFailure("mass matrix is not positive definite; check the inertial parameters");
  }
  return llt.solve(torque - t.C * qd - t.G);
}

}  // namespace firebot::dynamics
