#include "firebot/scenario.hpp"

#include "firebot/units.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace firebot::scenario {

using nlohmann::json;

ValidationError::ValidationError(std::string key, const std::string& what)
    : std::invalid_argument(what), key_(std::move(key)) {}

std::vector<mission::FireSpot> ScenarioConfig::default_fires() {
  return {{"F1", {0.35, -0.45, 0.9}, false}, {"F2", {0.48, -0.35, 0.8}, false}};
}

namespace {

// Walks one JSON object, remembers which keys were read and rejects the rest.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_or_root(), where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
        out = v.get<double>();
      } else if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
        out = v.get<int>();
      } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_unsigned()) throw std::invalid_argument("expected a non-negative integer");
        out = v.get<std::uint64_t>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
        out = v.get<std::string>();
      } else {
        // fixed-size numeric array
        if (!v.is_array() || v.size() != out.size()) {
          throw std::invalid_argument("expected an array of " + std::to_string(out.size()) + " numbers");
        }
        for (std::size_t i = 0; i < out.size(); ++i) {
          if (!v[i].is_number()) throw std::invalid_argument("expected numbers");
          out[i] = v[i].template get<double>();
        }
      }
    } catch (const std::invalid_argument& e) {
      throw ValidationError(key_path(key), key_path(key) + ": " + e.what());
    }
  }

  void vec3(const char* key, Eigen::Vector3d& out) {
    std::array<double, 3> a{out.x(), out.y(), out.z()};
    get(key, a);
    out = {a[0], a[1], a[2]};
  }

  bool has(const char* key) const { return j_.contains(key); }

  void object(const char* key, const std::function<void(Reader&)>& fn) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    Reader r(j_.at(key), key_path(key));
    fn(r);
    r.finish();
  }

  void array(const char* key, const std::function<void(const json&, const std::string&)>& fn) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ValidationError(key_path(key), key_path(key) + " must be an array");
    for (std::size_t i = 0; i < v.size(); ++i) fn(v[i], key_path(key) + "[" + std::to_string(i) + "]");
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) {
        throw ValidationError(key_path(item.key().c_str()), "unknown key " + key_path(item.key().c_str()));
      }
    }
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "scenario" : path_; }
  std::string path_or_root() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void read_gains(Reader& r, arm::ArmGains& g) {
  r.get("lambda", g.lambda);
  r.get("K", g.K);
  r.get("boundary_layer", g.boundary_layer);
}

void read_gains(Reader& r, chassis::ChassisGains& g) {
  r.get("k1", g.k1);
  r.get("k2", g.k2);
  r.get("k3", g.k3);
  r.get("Q1", g.Q1);
  r.get("Q2", g.Q2);
  r.get("P1", g.P1);
  r.get("P2", g.P2);
  r.get("l", g.l);
  r.get("fm1", g.fm1);
  r.get("fm2", g.fm2);
  r.get("surface_sign_width", g.surface_sign_width);
  std::string sw = g.switching == chassis::Switching::sign ? "sign" : "saturation";
  r.get("switching", sw);
  if (sw == "sign") {
    g.switching = chassis::Switching::sign;
  } else if (sw == "saturation") {
    g.switching = chassis::Switching::saturation;
  } else {
    throw ValidationError(r.key_path("switching"), r.key_path("switching") + " must be sign or saturation");
  }
  r.get("switching_width", g.switching_width);
}

ScenarioConfig from_json(const json& root) {
  ScenarioConfig c;
  Reader r(root, "");
  r.get("dt", c.dt);
  std::string integrator = c.integrator == chassis::Integrator::rk4 ? "rk4" : "euler";
  r.get("integrator", integrator);
  if (integrator == "rk4") {
    c.integrator = chassis::Integrator::rk4;
  } else if (integrator == "euler") {
    c.integrator = chassis::Integrator::euler;
  } else {
    throw ValidationError("integrator", "integrator must be rk4 or euler");
  }
  r.get("seed", c.seed);

  r.object("fire_test", [&](Reader& o) {
    o.get("class", c.fire_test.test_class);
    o.get("crib_side_m", c.fire_test.crib_side);
    o.get("discharge_time_s", c.fire_test.discharge_time);
    o.get("stage2_budget_s", c.fire_test.stage2_budget);
  });
  r.object("circuit", [&](Reader& o) {
    std::array<double, 2> center{c.circuit.center_x, c.circuit.center_y};
    o.get("center_m", center);
    c.circuit.center_x = center[0];
    c.circuit.center_y = center[1];
    o.get("edge_length_m", c.circuit.edge_length);
    o.get("corner_radius_m", c.circuit.corner_radius);
    o.get("min_corner_radius_m", c.circuit.min_corner_radius);
    o.get("blend_length_m", c.circuit.blend_length);
    o.get("speed_mps", c.circuit.speed);
  });
  r.object("sweep", [&](Reader& o) {
    o.get("vertical_span_m", c.sweep.vertical_span_m);
    o.get("horizontal_span_m", c.sweep.horizontal_span_m);
    o.get("passes", c.sweep.passes);
    o.get("speed_mps", c.sweep.speed_mps);
    o.get("center_height_m", c.sweep.center_height_m);
    o.get("pitch_deg", c.sweep.pitch_deg);
    o.get("corner_blend_s", c.sweep.corner_blend_s);
  });
  r.object("stage2", [&](Reader& o) {
    o.get("spray_pitch_deg", c.stage2.spray_pitch_deg);
    o.get("min_transition_s", c.stage2.min_transition_s);
    o.get("min_dwell_s", c.stage2.min_dwell_s);
  });
  r.object("top_spray", [&](Reader& o) {
    o.get("duration_s", c.top_spray.duration_s);
    o.get("theta2_deg", c.top_spray.theta2_deg);
    o.get("theta3_deg", c.top_spray.theta3_deg);
    o.get("theta4_deg", c.top_spray.theta4_deg);
  });
  if (r.has("fires")) c.fires.clear();
  r.array("fires", [&](const json& j, const std::string& path) {
    Reader o(j, path);
    mission::FireSpot f;
    f.id = "F" + std::to_string(c.fires.size() + 1);
    o.get("id", f.id);
    o.vec3("position_m", f.position);
    o.finish();
    c.fires.push_back(f);
  });
  r.object("arm", [&](Reader& o) {
    std::size_t rows = 0;
    o.array("dh", [&](const json& j, const std::string& path) {
      if (rows >= c.arm.dh.size()) throw ValidationError(path, "arm.dh must have exactly 5 rows");
      Reader d(j, path);
      auto& row = c.arm.dh[rows++];
      d.get("a_mm", row.a_mm);
      d.get("alpha_deg", row.alpha_deg);
      d.get("d_mm", row.d_mm);
      d.get("joint", row.joint);
      d.finish();
    });
    if (o.has("dh") && rows != c.arm.dh.size()) throw ValidationError("arm.dh", "arm.dh must have exactly 5 rows");
    o.object("limits", [&](Reader& l) {
      l.get("lower_deg", c.arm.lower_deg);
      l.get("upper_deg", c.arm.upper_deg);
      l.get("interior_min_deg", c.arm.interior_min_deg);
      l.get("interior_max_deg", c.arm.interior_max_deg);
    });
    o.get("tool_y5p_mm", c.arm.tool_y5p_mm);
    std::array<double, 3> mount{c.arm.mount.x, c.arm.mount.y, c.arm.mount.z};
    o.get("mount_m", mount);
    c.arm.mount = {mount[0], mount[1], mount[2]};
    o.object("gains", [&](Reader& g) { read_gains(g, c.arm.gains); });
  });
  r.object("inertia", [&](Reader& o) {
    o.get("total_mass_kg", c.inertia.total_mass_kg);
    o.get("payload_kg", c.inertia.payload_kg);
    o.get("gravity_mps2", c.inertia.gravity);
    o.get("viscous_Nms", c.inertia.viscous);
    if (o.has("links")) c.inertia.links.emplace();
    std::size_t n = 0;
    o.array("links", [&](const json& j, const std::string& path) {
      if (n >= 4) throw ValidationError(path, "inertia.links must have exactly 4 entries");
      Reader l(j, path);
      auto& p = (*c.inertia.links)[n++];
      l.get("mass_kg", p.mass);
      l.get("com_mm", p.com);
      l.get("inertia_kgm2", p.inertia);
      l.finish();
    });
    if (c.inertia.links && n != 4) throw ValidationError("inertia.links", "inertia.links must have exactly 4 entries");
  });
  r.object("chassis", [&](Reader& o) {
    o.object("gains", [&](Reader& g) { read_gains(g, c.chassis.gains); });
    o.get("track_width_m", c.chassis.track_width_m);
    o.object("initial_offset", [&](Reader& i) {
      i.get("along_m", c.chassis.initial_offset.along_m);
      i.get("lateral_m", c.chassis.initial_offset.lateral_m);
      i.get("heading_deg", c.chassis.initial_offset.heading_deg);
    });
  });
  r.object("disturbance", [&](Reader& o) {
    std::string kind = chassis::to_string(c.disturbance.kind);
    o.get("kind", kind);
    try {
      c.disturbance.kind = chassis::disturbance_kind_from(kind);
    } catch (const std::invalid_argument& e) {
      throw ValidationError("disturbance.kind", e.what());
    }
    o.get("amplitude", c.disturbance.amplitude);
    o.get("frequency_hz", c.disturbance.frequency_hz);
  });
  r.object("workspace", [&](Reader& o) {
    o.get("joint_step_deg", c.workspace.joint_step_deg);
    o.get("azimuth_step_deg", c.workspace.azimuth_step_deg);
    o.get("wrist_deg", c.workspace.wrist_deg);
    o.array("points", [&](const json& j, const std::string& path) {
      Reader p(j, path);
      WorkspacePoint w;
      p.get("name", w.name);
      p.get("x_mm", w.x_mm);
      p.get("y_mm", w.y_mm);
      p.get("z_mm", w.z_mm);
      p.get("phi_deg", w.phi_deg);
      p.finish();
      c.workspace.points.push_back(w);
    });
  });
  r.finish();
  c.validate();
  return c;
}

json gains_json(const arm::ArmGains& g) {
  return {{"lambda", g.lambda}, {"K", g.K}, {"boundary_layer", g.boundary_layer}};
}

json gains_json(const chassis::ChassisGains& g) {
  return {{"k1", g.k1},
          {"k2", g.k2},
          {"k3", g.k3},
          {"Q1", g.Q1},
          {"Q2", g.Q2},
          {"P1", g.P1},
          {"P2", g.P2},
          {"l", g.l},
          {"fm1", g.fm1},
          {"fm2", g.fm2},
          {"surface_sign_width", g.surface_sign_width},
          {"switching", g.switching == chassis::Switching::sign ? "sign" : "saturation"},
          {"switching_width", g.switching_width}};
}

// Runs a module validator and re-labels its error with a key path. Module
// messages start with the key they complain about.
void checked(const std::string& block, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    std::string key = msg.substr(0, msg.find_first_of(" :"));
    if (key.rfind(block, 0) != 0) key = block;
    throw ValidationError(key, msg);
  }
}

void positive(const std::string& key, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(key, key + " must be > 0");
}

}  // namespace

void ScenarioConfig::validate() const {
  positive("dt", dt);
  checked("fire_test", [&] { fire_test.validate(); });
  checked("circuit", [&] { circuit.validate(); });
  checked("sweep", [&] { mission_inputs(*this).sweep.validate(); });
  checked("stage2", [&] { mission_inputs(*this).stage2.validate(); });
  checked("top_spray", [&] { mission_inputs(*this).top_spray.validate(); });
  std::set<std::string> ids;
  for (std::size_t i = 0; i < fires.size(); ++i) {
    const std::string key = "fires[" + std::to_string(i) + "]";
    if (!fires[i].position.allFinite()) throw ValidationError(key + ".position_m", key + ".position_m must be finite");
    if (!ids.insert(fires[i].id).second) throw ValidationError(key + ".id", "duplicate fire id " + fires[i].id);
  }
  checked("arm", [&] {
    const auto m = manipulator(*this);
    m.table.validate();
    for (int i = 0; i < 4; ++i) {
      if (!(m.limits.lower[i] < m.limits.upper[i])) {
        throw ValidationError("arm.limits", "arm.limits: lower must be below upper for every joint");
      }
    }
  });
  if (!(arm.tool_y5p_mm >= 0.0)) throw ValidationError("arm.tool_y5p_mm", "arm.tool_y5p_mm must be >= 0");
  checked("arm.gains", [&] { arm.gains.validate(); });
  positive("inertia.total_mass_kg", inertia.total_mass_kg);
  checked("inertia", [&] { arm_model(*this).inertia.validate(); });
  checked("chassis.gains", [&] { chassis.gains.validate(); });
  positive("chassis.track_width_m", chassis.track_width_m);
  for (int i = 0; i < 2; ++i) {
    const double a = std::abs(disturbance.amplitude[i]);
    const double bound = i == 0 ? chassis.gains.fm1 : chassis.gains.fm2;
    if (!(a <= bound)) {
      throw ValidationError("disturbance.amplitude", "disturbance.amplitude exceeds chassis.gains.fm" +
                                                         std::to_string(i + 1));
    }
  }
  positive("disturbance.frequency_hz", disturbance.frequency_hz);
  positive("workspace.joint_step_deg", workspace.joint_step_deg);
  if (!(workspace.azimuth_step_deg >= 0.0)) {
    throw ValidationError("workspace.azimuth_step_deg", "workspace.azimuth_step_deg must be >= 0");
  }
}

ScenarioConfig parse_scenario(const std::string& text) {
  bool blank = true;
  for (char ch : text) blank = blank && std::isspace(static_cast<unsigned char>(ch));
  if (blank) {
    ScenarioConfig c;
    c.validate();
    return c;
  }
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return from_json(root);
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string serialize(const ScenarioConfig& c) {
  json root;
  root["dt"] = c.dt;
  root["integrator"] = c.integrator == chassis::Integrator::rk4 ? "rk4" : "euler";
  root["seed"] = c.seed;
  root["fire_test"] = {{"class", c.fire_test.test_class},
                       {"crib_side_m", c.fire_test.crib_side},
                       {"discharge_time_s", c.fire_test.discharge_time},
                       {"stage2_budget_s", c.fire_test.stage2_budget}};
  root["circuit"] = {{"center_m", {c.circuit.center_x, c.circuit.center_y}},
                     {"edge_length_m", c.circuit.edge_length},
                     {"corner_radius_m", c.circuit.corner_radius},
                     {"min_corner_radius_m", c.circuit.min_corner_radius},
                     {"blend_length_m", c.circuit.blend_length},
                     {"speed_mps", c.circuit.speed}};
  root["sweep"] = {{"vertical_span_m", c.sweep.vertical_span_m}, {"horizontal_span_m", c.sweep.horizontal_span_m},
                   {"passes", c.sweep.passes},                   {"speed_mps", c.sweep.speed_mps},
                   {"center_height_m", c.sweep.center_height_m}, {"pitch_deg", c.sweep.pitch_deg},
                   {"corner_blend_s", c.sweep.corner_blend_s}};
  root["stage2"] = {{"spray_pitch_deg", c.stage2.spray_pitch_deg},
                    {"min_transition_s", c.stage2.min_transition_s},
                    {"min_dwell_s", c.stage2.min_dwell_s}};
  root["top_spray"] = {{"duration_s", c.top_spray.duration_s},
                       {"theta2_deg", c.top_spray.theta2_deg},
                       {"theta3_deg", c.top_spray.theta3_deg},
                       {"theta4_deg", c.top_spray.theta4_deg}};
  json fires = json::array();
  for (const auto& f : c.fires) {
    fires.push_back({{"id", f.id}, {"position_m", {f.position.x(), f.position.y(), f.position.z()}}});
  }
  root["fires"] = fires;

  json dh = json::array();
  for (const auto& row : c.arm.dh) {
    dh.push_back({{"a_mm", row.a_mm}, {"alpha_deg", row.alpha_deg}, {"d_mm", row.d_mm}, {"joint", row.joint}});
  }
  root["arm"] = {{"dh", dh},
                 {"limits",
                  {{"lower_deg", c.arm.lower_deg},
                   {"upper_deg", c.arm.upper_deg},
                   {"interior_min_deg", c.arm.interior_min_deg},
                   {"interior_max_deg", c.arm.interior_max_deg}}},
                 {"tool_y5p_mm", c.arm.tool_y5p_mm},
                 {"mount_m", {c.arm.mount.x, c.arm.mount.y, c.arm.mount.z}},
                 {"gains", gains_json(c.arm.gains)}};

  json inertia = {{"total_mass_kg", c.inertia.total_mass_kg},
                  {"payload_kg", c.inertia.payload_kg},
                  {"gravity_mps2", c.inertia.gravity},
                  {"viscous_Nms", c.inertia.viscous}};
  if (c.inertia.links) {
    json links = json::array();
    for (const auto& l : *c.inertia.links) {
      links.push_back({{"mass_kg", l.mass}, {"com_mm", l.com}, {"inertia_kgm2", l.inertia}});
    }
    inertia["links"] = links;
  }
  root["inertia"] = inertia;

  root["chassis"] = {{"gains", gains_json(c.chassis.gains)},
                     {"track_width_m", c.chassis.track_width_m},
                     {"initial_offset",
                      {{"along_m", c.chassis.initial_offset.along_m},
                       {"lateral_m", c.chassis.initial_offset.lateral_m},
                       {"heading_deg", c.chassis.initial_offset.heading_deg}}}};
  root["disturbance"] = {{"kind", chassis::to_string(c.disturbance.kind)},
                         {"amplitude", c.disturbance.amplitude},
                         {"frequency_hz", c.disturbance.frequency_hz}};
  json points = json::array();
  for (const auto& p : c.workspace.points) {
    points.push_back(
        {{"name", p.name}, {"x_mm", p.x_mm}, {"y_mm", p.y_mm}, {"z_mm", p.z_mm}, {"phi_deg", p.phi_deg}});
  }
  root["workspace"] = {{"joint_step_deg", c.workspace.joint_step_deg},
                       {"azimuth_step_deg", c.workspace.azimuth_step_deg},
                       {"wrist_deg", c.workspace.wrist_deg},
                       {"points", points}};
  return root.dump(2) + "\n";
}

void save_scenario(const ScenarioConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << serialize(config);
}

kinematics::Manipulator manipulator(const ScenarioConfig& c) {
  kinematics::Manipulator m;
  for (std::size_t i = 0; i < c.arm.dh.size(); ++i) {
    const auto& r = c.arm.dh[i];
    m.table.rows[i] = {r.a_mm, deg2rad(r.alpha_deg), r.d_mm, r.joint};
  }
  for (int i = 0; i < 4; ++i) {
    m.limits.lower[i] = deg2rad(c.arm.lower_deg[i]);
    m.limits.upper[i] = deg2rad(c.arm.upper_deg[i]);
  }
  m.limits.interior_min = deg2rad(c.arm.interior_min_deg);
  m.limits.interior_max = deg2rad(c.arm.interior_max_deg);
  return m;
}

kinematics::ToolOffset tool(const ScenarioConfig& c) { return {c.arm.tool_y5p_mm}; }

dynamics::ArmModel arm_model(const ScenarioConfig& c) {
  dynamics::ArmModel model;
  model.arm = manipulator(c);
  model.tool = tool(c);
  model.inertia = dynamics::LinkInertialParams::uniform_rods(model.arm.table, c.inertia.total_mass_kg,
                                                             c.inertia.payload_kg);
  if (c.inertia.links) model.inertia.links = *c.inertia.links;
  model.inertia.gravity = c.inertia.gravity;
  model.inertia.viscous = c.inertia.viscous;
  return model;
}

mission::MissionInputs mission_inputs(const ScenarioConfig& c) {
  mission::MissionInputs in;
  in.fire_test = c.fire_test;
  in.circuit = c.circuit;
  in.sweep = {c.sweep.vertical_span_m, c.sweep.horizontal_span_m, c.sweep.passes,         c.sweep.speed_mps,
              c.sweep.center_height_m, deg2rad(c.sweep.pitch_deg), c.sweep.corner_blend_s};
  in.stage2 = {deg2rad(c.stage2.spray_pitch_deg), c.stage2.min_transition_s, c.stage2.min_dwell_s};
  in.top_spray = {c.top_spray.duration_s, deg2rad(c.top_spray.theta2_deg), deg2rad(c.top_spray.theta3_deg),
                  deg2rad(c.top_spray.theta4_deg)};
  in.fires = c.fires;
  in.arm = {manipulator(c), tool(c), c.arm.mount};
  in.dt = c.dt;
  in.chassis_l = c.chassis.gains.l;
  return in;
}

chassis::DisturbanceSpec disturbance(const ScenarioConfig& c) {
  return {c.disturbance.kind, c.disturbance.amplitude, c.disturbance.frequency_hz, c.seed};
}

kinematics::WorkspaceOptions workspace_options(const ScenarioConfig& c) {
  kinematics::WorkspaceOptions o;
  o.joint_step = deg2rad(c.workspace.joint_step_deg);
  o.azimuth_step = deg2rad(c.workspace.azimuth_step_deg);
  o.wrist_angle = deg2rad(c.workspace.wrist_deg);
  o.tool = tool(c);
  for (const auto& p : c.workspace.points) {
    o.check_points.push_back({p.name, {p.x_mm, p.y_mm, p.z_mm, deg2rad(p.phi_deg)}});
  }
  return o;
}

kinematics::JointAngles top_spray_joints(const ScenarioConfig& c) {
  return {0.0, deg2rad(c.top_spray.theta2_deg), deg2rad(c.top_spray.theta3_deg), deg2rad(c.top_spray.theta4_deg)};
}

}  // namespace firebot::scenario
