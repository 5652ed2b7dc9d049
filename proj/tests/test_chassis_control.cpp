#include <doctest.h>

#include "firebot/chassis_control.hpp"
#include "firebot/mission_planner.hpp"
#include "firebot/units.hpp"

#include <random>

using namespace firebot;
using namespace firebot::chassis;

namespace {

struct Trace {
  std::vector<double> t, e1, e2, e3, V;
};

// Chassis-only closed loop along one lap of the default circuit.
Trace run_lap(const ChassisGains& g, double along, double heading_deg, const DisturbanceSpec& dist, double T) {
  const mission::Circuit circuit(mission::CircuitSpec{});
  mission::ChassisTrajectory traj(circuit, g.l);
  traj.add(0.0, 100.0, 0.0, circuit.spec().speed);
  const double dt = 1e-3;
  const auto r0 = traj.sample(0.0);
  ChassisState q{r0.pose.x + along * std::cos(r0.pose.phi), r0.pose.y + along * std::sin(r0.pose.phi),
                 r0.pose.phi + deg2rad(heading_deg)};
  ChassisVelocity z = r0.vel;
  Disturbance d(dist);
  Trace out;
  const int n = static_cast<int>(std::lround(T / dt));
  for (int k = 0; k <= n; ++k) {
    const double t = k * dt;
    const auto r = traj.sample(t);
    const auto e = tracking_error(r.pose, q, g.l);
    const auto ed = error_rates(e, r, q, z, g.l);
    const auto c = chassis_control_law(e, ed, r, q, z, g);
    out.t.push_back(t);
    out.e1.push_back(e.e1);
    out.e2.push_back(e.e2);
    out.e3.push_back(e.e3);
    out.V.push_back(0.5 * (c.s[0] * c.s[0] + c.s[1] * c.s[1]));
    const auto f = d.next(t);
    const auto rm = traj.sample(t + 0.5 * dt), rn = traj.sample(t + dt);
    const auto zn = reduced_dynamics_step(z, r.vel, rn.vel, c.u, f, g, dt);
    q = integrate_pose(q, z, r.vel, rm.vel, rn.vel, c.u, f, dt, Integrator::rk4);
    z = zn;
  }
  return out;
}

}  // namespace

TEST_SUITE("chassis_control") {
  TEST_CASE("tracking error by hand") {
    const auto z = tracking_error({1.0, 2.0, 0.3}, {1.0, 2.0, 0.3});
    CHECK(z.e1 == 0.0);
    CHECK(z.e2 == 0.0);
    CHECK(z.e3 == 0.0);
    const auto a = tracking_error({1.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
    CHECK(a.e1 == doctest::Approx(1.0));
    CHECK(a.e2 == doctest::Approx(0.0));
    const auto b = tracking_error({1.0, 0.0, kPi / 2}, {0.0, 0.0, kPi / 2});
    CHECK(b.e1 == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(b.e2 == doctest::Approx(-1.0));
    CHECK(b.e3 == 0.0);
  }

  TEST_CASE("tracking error is invariant under rigid motions") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int n = 0; n < 200; ++n) {
      const ChassisState r{u(rng), u(rng), u(rng)}, q{u(rng), u(rng), u(rng)};
      const double a = u(rng), tx = u(rng), ty = u(rng);
      auto move = [&](const ChassisState& p) {
        return ChassisState{std::cos(a) * p.x - std::sin(a) * p.y + tx, std::sin(a) * p.x + std::cos(a) * p.y + ty,
                            p.phi + a};
      };
      const auto e0 = tracking_error(r, q, 0.3), e1 = tracking_error(move(r), move(q), 0.3);
      CHECK(e1.e1 == doctest::Approx(e0.e1).epsilon(1e-9));
      CHECK(e1.e2 == doctest::Approx(e0.e2).epsilon(1e-9));
      CHECK(std::abs(wrap_angle(e1.e3 - e0.e3)) < 1e-9);
    }
  }

  TEST_CASE("sliding surface by hand arithmetic") {
    ChassisGains g;
    CHECK(chassis_sliding_surface({}, {}, g) == std::array<double, 2>{0.0, 0.0});
    g.k1 = 2.0;
    const auto s = chassis_sliding_surface({0.1, 0.0, 0.0}, {}, g);
    CHECK(s[0] == doctest::Approx(0.2));
    CHECK(s[1] == 0.0);

    g = ChassisGains{};
    g.k1 = 2.0, g.k2 = 3.0, g.k3 = 4.0;
    // a = -0.02 + 3 * 0.05 = 0.13; sat(e1 / 0.01) = -1
    const auto t = chassis_sliding_surface({-0.1, 0.05, 0.02}, {0.01, -0.02, 0.005}, g);
    CHECK(t[0] == doctest::Approx(0.01 - 0.2 - 0.13).epsilon(1e-12));
    CHECK(t[1] == doctest::Approx(0.005 + 0.08 + 0.13).epsilon(1e-12));
  }

  TEST_CASE("exact straight-line tracking needs no input") {
    ChassisReferenceSample r;
    r.pose = {1.0, 2.0, 0.4};
    r.vel = {0.88, 0.0};
    r.vdx = 0.88 * std::cos(0.4);
    r.vdy = 0.88 * std::sin(0.4);
    const ChassisGains g;
    const ChassisVelocity z{0.88, 0.0};
    const auto e = tracking_error(r.pose, r.pose, g.l);
    const auto ed = error_rates(e, r, r.pose, z, g.l);
    const auto c = chassis_control_law(e, ed, r, r.pose, z, g);
    CHECK(std::abs(c.u[0]) < 1e-12);
    CHECK(std::abs(c.u[1]) < 1e-12);
  }

  TEST_CASE("on the reference with a yaw acceleration the law is pure feedforward") {
    ChassisReferenceSample r;
    r.pose = {0.0, 0.0, 0.0};
    r.vel = {0.0, 0.0};
    r.wd_dot = 0.7;
    r.acc = {0.0, 0.7};
    const ChassisGains g;
    const auto c = chassis_control_law({}, {}, r, r.pose, {}, g);
    CHECK(c.w_dot == doctest::Approx(0.7));
    CHECK(std::abs(c.u[1]) < 1e-12);
  }

  TEST_CASE("the commanded accelerations put the surfaces on the reaching law") {
    // Evolve the plant over a tiny step and difference the surfaces.
    const mission::Circuit circuit(mission::CircuitSpec{});
    ChassisGains g;
    g.switching = Switching::saturation;
    g.switching_width = 0.05;
    g.surface_sign_width = 0.5;  // keep sigma smooth over the step
    mission::ChassisTrajectory traj(circuit, g.l);
    traj.add(0.0, 100.0, 0.0, 0.88);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n = 0; n < 20; ++n) {
      const double t = 1.0 + 0.3 * n;  // spans straights, blends and arcs
      const auto r = traj.sample(t);
      const ChassisState q{r.pose.x + 0.03 * u(rng), r.pose.y + 0.03 * u(rng), r.pose.phi + 0.05 * u(rng)};
      const ChassisVelocity z{0.88 + 0.05 * u(rng), r.vel.w + 0.1 * u(rng)};
      const auto e = tracking_error(r.pose, q, g.l);
      const auto ed = error_rates(e, r, q, z, g.l);
      const auto c = chassis_control_law(e, ed, r, q, z, g);

      const double h = 1e-6;
      const auto rm = traj.sample(t + 0.5 * h), rn = traj.sample(t + h);
      const auto zn = reduced_dynamics_step(z, r.vel, rn.vel, c.u, {0.0, 0.0}, g, h);
      const auto qn = integrate_pose(q, z, r.vel, rm.vel, rn.vel, c.u, {0.0, 0.0}, h, Integrator::rk4);
      const auto en = tracking_error(rn.pose, qn, g.l);
      const auto sn = chassis_sliding_surface(en, error_rates(en, rn, qn, zn, g.l), g);
      for (int i = 0; i < 2; ++i) {
        const double sdot = (sn[i] - c.s[i]) / h;
        CHECK(sdot == doctest::Approx(c.reaching[i]).epsilon(1e-3).scale(1.0));
      }
    }
  }

  TEST_CASE("reduced dynamics integrates the input") {
    const ChassisGains g;
    const ChassisVelocity zr{0.5, 0.1};
    auto z = reduced_dynamics_step(zr, zr, zr, {0.0, 0.0}, {0.0, 0.0}, g, 1e-3);
    CHECK(z == zr);
    ChassisVelocity v{0.0, 0.0};
    for (int k = 0; k < 1000; ++k) v = reduced_dynamics_step(v, {}, {}, {0.3, 0.0}, {0.0, 0.0}, g, 1e-3);
    CHECK(v.v == doctest::Approx(0.3));
    CHECK(v.w == 0.0);
    CHECK_THROWS_AS(reduced_dynamics_step(v, {}, {}, {0.0, 0.0}, {0.2, 0.0}, g, 1e-3), DisturbanceBoundViolation);
  }

  TEST_CASE("gain validation requires P >= fm") {
    ChassisGains g;
    g.P1 = 0.05;
    CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("P1"), std::invalid_argument);
  }

  TEST_CASE("track speeds") {
    const auto s = track_speeds({1.0, 0.5}, 0.8);
    CHECK(s[0] == doctest::Approx(0.8));
    CHECK(s[1] == doctest::Approx(1.2));
  }

  TEST_CASE("seeded noise repeats and stays in bounds") {
    DisturbanceSpec spec{DisturbanceKind::noise, {0.1, 0.05}, 1.0, 42};
    Disturbance a(spec), b(spec);
    spec.seed = 43;
    Disturbance c(spec);
    bool differs = false;
    for (int k = 0; k < 1000; ++k) {
      const auto x = a.next(k * 1e-3), y = b.next(k * 1e-3), w = c.next(k * 1e-3);
      CHECK(x == y);
      CHECK(std::abs(x[0]) <= 0.1);
      CHECK(std::abs(x[1]) <= 0.05);
      differs = differs || x != w;
    }
    CHECK(differs);
    Disturbance s({DisturbanceKind::sinusoid, {0.1, 0.1}, 2.0, 1});
    CHECK(s.next(0.125)[0] == doctest::Approx(0.1));
    CHECK(disturbance_kind_from("constant") == DisturbanceKind::constant);
    CHECK_THROWS_AS(disturbance_kind_from("gust"), std::invalid_argument);
  }

  TEST_CASE("closed loop from an offset converges into the band and V does not grow") {
    const ChassisGains g;
    const auto tr = run_lap(g, -0.1, -5.0, {DisturbanceKind::sinusoid, {0.1, 0.1}, 1.5, 1}, 3.0);
    std::size_t entered = tr.t.size();
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
      const bool in = std::abs(tr.e1[i]) <= 0.02 && std::abs(tr.e2[i]) <= 0.001 &&
                      std::abs(tr.e3[i]) <= deg2rad(0.6);
      if (!in) entered = tr.t.size();
      else if (entered == tr.t.size()) entered = i;
    }
    REQUIRE(entered < tr.t.size());
    CHECK(tr.t[entered] <= 1.0);
    double worst = 0.0;
    for (std::size_t i = 1; i < tr.V.size(); ++i) worst = std::max(worst, tr.V[i] - tr.V[i - 1]);
    CHECK(worst <= 1e-6);
  }

  TEST_CASE("heading error stays continuous across the wrap seam over a full lap") {
    const ChassisGains g;
    const auto tr = run_lap(g, 0.0, 0.0, {}, 11.9);
    double jump = 0.0;
    for (std::size_t i = 1; i < tr.e3.size(); ++i) jump = std::max(jump, std::abs(tr.e3[i] - tr.e3[i - 1]));
    CHECK(jump < 1e-4);
  }
}
