#include <doctest.h>

#include "firebot/mission_planner.hpp"
#include "firebot/scenario.hpp"

#include <random>

using namespace firebot;
using namespace firebot::mission;

namespace {

struct OracleStop {
  std::size_t fire;
  int nearest;
  double s;
};

// Stop placement from the square geometry alone: straights of length l at
// distance h from the centre, K points at their midpoints.
std::vector<OracleStop> oracle_stops(const std::vector<FireSpot>& fires, double h, double l, double edge) {
  std::vector<OracleStop> out;
  for (std::size_t i = 0; i < fires.size(); ++i) {
    const double x = fires[i].position.x(), y = fires[i].position.y();
    int best = 0;
    double best_d = 1e300;
    for (int j = 0; j < 8; ++j) {
      const int g = j / 2;
      const double ax = (j % 2 ? 0.5 : -0.5) * l, ay = -h;
      const double c = std::cos(g * kPi / 2), s = std::sin(g * kPi / 2);
      const double px = c * ax - s * ay, py = s * ax + c * ay;
      const double d = (px - x) * (px - x) + (py - y) * (py - y);
      if (d < best_d) best_d = d, best = j;
    }
    const int g = best / 2;
    const double c = std::cos(g * kPi / 2), s = std::sin(g * kPi / 2);
    const double along = c * x + s * y;  // fire in the straight's own frame
    const double u = std::clamp(along + 0.5 * l, 0.0, l);
    double sp = g * edge - 0.5 * l + u;
    if (sp < 0) sp += 4 * edge;
    out.push_back({i, best + 1, sp});
  }
  std::stable_sort(out.begin(), out.end(), [](const OracleStop& a, const OracleStop& b) { return a.s < b.s; });
  return out;
}

std::vector<FireSpot> random_fires(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-0.5, 0.5), z(0.2, 1.0);
  std::vector<FireSpot> f;
  for (int i = 0; i < n; ++i) f.push_back({"F" + std::to_string(i + 1), {u(rng), u(rng), z(rng)}, false});
  return f;
}

}  // namespace

TEST_SUITE("mission_planner") {
  TEST_CASE("edge length and time of the default circuit") {
    const Circuit c(CircuitSpec{});
    CHECK(c.spec().edge_length == doctest::Approx(2.601).epsilon(1e-3));
    CHECK(c.edge_time() == doctest::Approx(2.956).epsilon(1e-3));
    CHECK(4.0 * c.edge_time() == doctest::Approx(11.824).epsilon(1e-4));
  }

  TEST_CASE("circuit closes, is continuous and puts K points mid-straight") {
    const Circuit c(CircuitSpec{});
    const auto& k = c.k_points();
    CHECK((k[4].position - k[0].position).norm() < 1e-12);
    for (int g = 0; g < 4; ++g) {
      const auto p = c.at(k[g].s);
      CHECK((p.pose.x - k[g].position.x()) == doctest::Approx(0.0).scale(1.0));
      CHECK(std::abs(p.curvature) < 1e-12);
      CHECK(std::cos(p.pose.phi - g * kPi / 2) == doctest::Approx(1.0));
      CHECK(k[g].position.norm() == doctest::Approx(c.half_width()));
    }
    const auto& a = c.a_points();
    for (int g = 1; g <= 4; ++g) {
      const auto st = c.straight(g);
      CHECK((st.start - a[2 * g - 2].position).norm() < 1e-12);
      CHECK((st.end - a[2 * g - 1].position).norm() < 1e-12);
      CHECK(a[2 * g - 2].s == doctest::Approx(st.s_start));
      // A points are nominal tangency points; the curvature blend pulls the
      // path slightly off them.
      const auto p = c.at(st.s_start).pose;
      CHECK(std::hypot(p.x - st.start.x(), p.y - st.start.y()) < 5e-3);
    }
    double worst = 0.0, length = 0.0;
    auto prev = c.at(0.0);
    const int n = 20000;
    for (int i = 1; i <= n; ++i) {
      const auto p = c.at(c.lap_length() * i / n);
      const double d = std::hypot(p.pose.x - prev.pose.x, p.pose.y - prev.pose.y);
      worst = std::max(worst, d);
      length += d;
      prev = p;
    }
    CHECK(worst < 1.01 * c.lap_length() / n);
    CHECK(length == doctest::Approx(c.lap_length()).epsilon(1e-6));
    CHECK(std::hypot(prev.pose.x - k[0].position.x(), prev.pose.y - k[0].position.y()) < 1e-9);
  }

  TEST_CASE("corner radius below the minimum is rejected") {
    CircuitSpec s;
    s.corner_radius = 0.1;
    CHECK_THROWS_AS(Circuit{s}, GeometryError);
  }

  TEST_CASE("one face of the raster") {
    const SweepSpec spec;
    CHECK(spec.face_length() == doctest::Approx(4.1384).epsilon(1e-9));
    const auto sw = build_sweep(1, spec, 2.956);
    CHECK(sw.duration() == doctest::Approx(4.1384 / 1.4));
    CHECK(sw.duration() <= 2.956);
    // Blends only cut corners, so the travelled path is a little shorter.
    CHECK(sw.path_length() <= spec.face_length());
    CHECK(sw.path_length() > 0.98 * spec.face_length());
  }

  TEST_CASE("zero passes gives an empty sweep") {
    SweepSpec spec;
    spec.passes = 0;
    CHECK(build_sweep(2, spec, 2.956).empty());
    CHECK(build_stage_one_sweep(spec, 2.956).empty());
  }

  TEST_CASE("a sweep that overruns the edge is infeasible") {
    SweepSpec spec;
    spec.speed = 1.0;
    CHECK_THROWS_AS(build_sweep(1, spec, 2.956), InfeasibleSweep);
    spec = SweepSpec{};
    spec.passes = 2;
    CHECK_THROWS_AS(spec.validate(), InfeasibleSweep);
  }

  TEST_CASE("state machine walks the whole mission") {
    const MissionContext ctx{4, 2};
    MissionState s;
    s = mission_step(s, MissionEvent::start, ctx);
    CHECK(s.label() == "StageI:1:sweep");
    for (int e = 1; e <= 4; ++e) {
      s = mission_step(s, MissionEvent::sweep_complete, ctx);
      CHECK(s.label() == "StageI:" + std::to_string(e) + ":transit");
      s = mission_step(s, MissionEvent::edge_complete, ctx);
    }
    CHECK(s.label() == "TopSpray");
    s = mission_step(s, MissionEvent::top_spray_complete, ctx);
    CHECK(s.label() == "StageII:1:drive");
    s = mission_step(s, MissionEvent::arrived_at_stop, ctx);
    s = mission_step(s, MissionEvent::spray_complete, ctx);
    s = mission_step(s, MissionEvent::arrived_at_stop, ctx);
    CHECK(s.label() == "StageII:2:spray");
    s = mission_step(s, MissionEvent::spray_complete, ctx);
    CHECK(s.phase == Phase::end);
    CHECK_THROWS_AS(mission_step(s, MissionEvent::start, ctx), IllegalTransition);
    CHECK_THROWS_AS(mission_step(MissionState{}, MissionEvent::edge_complete, ctx), IllegalTransition);
    CHECK(mission_step({Phase::top_spray, 0, SubPhase::none}, MissionEvent::top_spray_complete, {4, 0}).phase ==
          Phase::end);
  }

  TEST_CASE("worked example: two residual fires") {
    const auto cfg = scenario::parse_scenario("");
    const Circuit c(cfg.circuit);
    const auto plan = assign_fires(cfg.fires, c);
    REQUIRE(plan.stops.size() == 2);
    CHECK(plan.stops[0].fire == 0);
    CHECK(plan.stops[0].nearest_a == 2);
    CHECK(group_label(plan.stops[0].group) == "A1A2");
    CHECK(plan.stops[1].fire == 1);
    CHECK(plan.stops[1].nearest_a == 3);
    CHECK(group_label(plan.stops[1].group) == "A3A4");
    CHECK(plan.stops[0].s < plan.stops[1].s);
  }

  TEST_CASE("stop placement agrees with the geometric oracle on random fire sets") {
    const Circuit c(CircuitSpec{});
    std::mt19937_64 rng(2024);
    for (int set = 0; set < 50; ++set) {
      const auto fires = random_fires(rng, 1 + set % 10);
      const auto got = assign_fires(fires, c);
      const auto want = oracle_stops(fires, c.half_width(), c.straight_length(), c.spec().edge_length);
      REQUIRE(got.stops.size() == want.size());
      for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(got.stops[i].nearest_a == want[i].nearest);
        CHECK(got.stops[i].s == doctest::Approx(want[i].s).epsilon(1e-12));
        if (i > 0) CHECK(got.stops[i - 1].s <= got.stops[i].s);
      }
    }
  }

  TEST_CASE("ties go to the lower A index") {
    const Circuit c(CircuitSpec{});
    // On the diagonal, A2 and A3 are equidistant.
    const auto plan = assign_fires({{"T", {0.4, -0.4, 0.5}, false}}, c);
    CHECK(plan.stops[0].nearest_a == 2);
  }

  TEST_CASE("no residual fires: the mission ends after Stage I") {
    auto cfg = scenario::parse_scenario("");
    cfg.fires.clear();
    const auto plan = plan_mission(scenario::mission_inputs(cfg));
    CHECK(plan.stops.stops.empty());
    CHECK(plan.commands.commands.empty());
    CHECK(plan.final_step == plan.top_spray_end);
    CHECK(plan.state_at(plan.final_step).phase == Phase::end);
  }

  TEST_CASE("one fire gives one drive and one spray") {
    auto cfg = scenario::parse_scenario("");
    cfg.fires.resize(1);
    const auto plan = plan_mission(scenario::mission_inputs(cfg));
    REQUIRE(plan.commands.commands.size() == 2);
    CHECK(plan.commands.commands[0].kind == Command::Kind::drive);
    CHECK(plan.commands.commands[1].kind == Command::Kind::reach_and_spray);
    CHECK(plan.commands.drive_time + plan.commands.dwell == doctest::Approx(cfg.fire_test.stage2_budget));
  }

  TEST_CASE("an unreachable fire is flagged and skipped") {
    auto cfg = scenario::parse_scenario("");
    cfg.fires.push_back({"far", {0.0, 0.0, 6.0}, false});
    const auto plan = plan_mission(scenario::mission_inputs(cfg));
    REQUIRE(plan.commands.flagged.size() == 1);
    CHECK(plan.commands.flagged[0].fire == "far");
    CHECK(plan.commands.commands.size() == 4);
  }

  TEST_CASE("default plan: timeline is complete and on budget") {
    const auto cfg = scenario::parse_scenario("");
    const auto plan = plan_mission(scenario::mission_inputs(cfg));
    const auto& c = plan.circuit;
    CHECK(static_cast<double>(plan.stage1_end) * plan.dt == doctest::Approx(4.0 * c.edge_time()).epsilon(1e-6));
    CHECK(plan.final_step - plan.top_spray_end == to_step(cfg.fire_test.stage2_budget, plan.dt));

    // Phases tile [0, final_step) without gaps.
    REQUIRE(!plan.phases.empty());
    CHECK(plan.phases.front().k0 == 0);
    for (std::size_t i = 1; i < plan.phases.size(); ++i) CHECK(plan.phases[i].k0 == plan.phases[i - 1].k1);
    CHECK(plan.phases.back().state.phase == Phase::end);

    for (std::size_t i = 1; i < plan.markers.size(); ++i) CHECK(plan.markers[i - 1].k <= plan.markers[i].k);
    int k_markers = 0;
    for (const auto& m : plan.markers) k_markers += m.label.size() == 2 && m.label[0] == 'K';
    CHECK(k_markers == 5);

    // Stage II dwell: whatever the drives leave of the budget, shared evenly.
    const auto& d = plan.commands;
    CHECK(d.drive_time + 2.0 * d.dwell == doctest::Approx(cfg.fire_test.stage2_budget));
    CHECK(d.drive_time == doctest::Approx(plan.stops.stops.back().s / c.spec().speed));

    CHECK(plan.state_at(0).label() == "StageI:1:sweep");
    CHECK(plan.state_at(plan.stage1_end - 1).phase == Phase::stage1);
    CHECK(plan.state_at(plan.stage1_end).phase != Phase::stage1);
  }
}
