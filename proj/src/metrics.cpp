#include "firebot/metrics.hpp"

#include "firebot/units.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace firebot::metrics {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

MetricsReport compute_metrics(const sim::SimLog& log, const Band& band) {
  if (log.rows.empty()) throw EmptyLog("metrics need at least one log row");
  MetricsReport r;

  // Marker times, first occurrence wins.
  std::map<std::string, double> at;
  for (const auto& row : log.rows) {
    if (row.event.empty()) continue;
    for (const auto& label : split(row.event, ';')) {
      at.emplace(label, row.time);
      if (starts_with(label, "discharge_time=")) r.discharge_time = parse_double(label.substr(15));
    }
  }

  std::array<double, 3> sum{};
  std::size_t first_in_band = log.rows.size();
  bool any_stage1 = false;
  double stage1_t0 = 0.0;
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    const auto& row = log.rows[i];
    if (!starts_with(row.state, "StageI:")) continue;
    if (!any_stage1) stage1_t0 = row.time;
    any_stage1 = true;

    if (row.state.find(":sweep") != std::string::npos) {
      ++r.sweep_samples;
      for (int a = 0; a < 3; ++a) {
        const double err = m2mm(std::abs(row.ee[a] - row.tgt[a]));
        sum[a] += err;
        r.ee_max_mm[a] = std::max(r.ee_max_mm[a], err);
      }
    }
    r.chassis_max_e1_mm = std::max(r.chassis_max_e1_mm, m2mm(std::abs(row.e1)));
    r.chassis_max_e2_mm = std::max(r.chassis_max_e2_mm, m2mm(std::abs(row.e2)));
    r.chassis_max_e3_deg = std::max(r.chassis_max_e3_deg, rad2deg(std::abs(row.e3)));

    const bool inside = std::abs(row.e1) <= band.e1 && std::abs(row.e2) <= band.e2 && std::abs(row.e3) <= band.e3;
    if (!inside) {
      first_in_band = log.rows.size();
    } else if (first_in_band == log.rows.size()) {
      first_in_band = i;
    }
  }
  if (r.sweep_samples > 0) {
    for (int a = 0; a < 3; ++a) r.ee_avg_mm[a] = sum[a] / static_cast<double>(r.sweep_samples);
  }
  r.convergence_time = first_in_band < log.rows.size() ? log.rows[first_in_band].time - stage1_t0 : -1.0;

  for (int i = 1; i <= 4; ++i) {
    const auto a = at.find("K" + std::to_string(i)), b = at.find("K" + std::to_string(i + 1));
    if (a != at.end() && b != at.end()) r.edge_times.push_back(b->second - a->second);
  }
  if (at.count("K1") && at.count("K5")) r.stage1_time = at["K5"] - at["K1"];
  if (at.count("top_spray_start") && at.count("top_spray_end")) {
    r.top_spray_time = at["top_spray_end"] - at["top_spray_start"];
  }
  if (at.count("stage2_start") && at.count("stage2_end")) r.stage2_time = at["stage2_end"] - at["stage2_start"];
  r.mission_time = r.stage1_time + r.top_spray_time + r.stage2_time;
  r.within_discharge = r.mission_time < r.discharge_time;
  return r;
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{
      "time", "state", "X",    "Y",    "phi",  "v",    "w",    "e1",   "e2",  "e3",  "s1",  "s2",
      "u1",   "u2",    "vL",   "vR",   "q1",   "q2",   "q3",   "q4",   "qd1", "qd2", "qd3", "qd4",
      "tau1", "tau2",  "tau3", "tau4", "eeX",  "eeY",  "eeZ",  "tgtX", "tgtY", "tgtZ", "event"};
  return cols;
}

std::string to_csv(const sim::SimLog& log) {
  std::string out;
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += '\n';
  for (const auto& r : log.rows) {
    std::string line = format_double(r.time) + "," + r.state;
    auto add = [&](double v) {
      line += ',';
      line += format_double(v);
    };
    for (double v : {r.X, r.Y, r.phi, r.v, r.w, r.e1, r.e2, r.e3, r.s1, r.s2, r.u1, r.u2, r.vL, r.vR}) add(v);
    for (const auto* vec : {&r.q, &r.qd, &r.tau}) {
      for (int i = 0; i < 4; ++i) add((*vec)[i]);
    }
    for (int i = 0; i < 3; ++i) add(r.ee[i]);
    for (int i = 0; i < 3; ++i) add(r.tgt[i]);
    line += ',';
    line += r.event;
    out += line;
    out += '\n';
  }
  return out;
}

sim::SimLog from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: missing header");
  const auto& cols = csv_columns();
  if (split(line, ',') != cols) throw std::invalid_argument("csv: header does not match the log schema");

  sim::SimLog log;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != cols.size()) {
      throw std::invalid_argument("csv line " + std::to_string(n) + ": expected " + std::to_string(cols.size()) +
                                  " fields");
    }
    sim::SimRow r;
    std::size_t i = 0;
    auto next = [&] { return parse_double(f[i++]); };
    r.time = next();
    r.state = f[i++];
    for (double* p : {&r.X, &r.Y, &r.phi, &r.v, &r.w, &r.e1, &r.e2, &r.e3, &r.s1, &r.s2, &r.u1, &r.u2, &r.vL,
                      &r.vR}) {
      *p = next();
    }
    for (auto* vec : {&r.q, &r.qd, &r.tau}) {
      for (int j = 0; j < 4; ++j) (*vec)[j] = next();
    }
    for (int j = 0; j < 3; ++j) r.ee[j] = next();
    for (int j = 0; j < 3; ++j) r.tgt[j] = next();
    r.event = f[i];
    log.rows.push_back(std::move(r));
  }
  if (log.rows.size() >= 2) log.dt = log.rows[1].time - log.rows[0].time;
  return log;
}

std::string report_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["ee_avg_error_mm"] = {{"x", r.ee_avg_mm[0]}, {"y", r.ee_avg_mm[1]}, {"z", r.ee_avg_mm[2]}};
  j["ee_max_error_mm"] = {{"x", r.ee_max_mm[0]}, {"y", r.ee_max_mm[1]}, {"z", r.ee_max_mm[2]}};
  j["sweep_samples"] = r.sweep_samples;
  j["chassis_max_e1_mm"] = r.chassis_max_e1_mm;
  j["chassis_max_e2_mm"] = r.chassis_max_e2_mm;
  j["chassis_max_e3_deg"] = r.chassis_max_e3_deg;
  j["convergence_time_s"] = r.convergence_time;
  j["edge_times_s"] = r.edge_times;
  j["stage1_time_s"] = r.stage1_time;
  j["top_spray_time_s"] = r.top_spray_time;
  j["stage2_time_s"] = r.stage2_time;
  j["mission_time_s"] = r.mission_time;
  j["discharge_time_s"] = r.discharge_time;
  j["verdict"] = r.within_discharge ? "PASS" : "FAIL";
  return j.dump(2) + "\n";
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

template <typename Fn>
std::string table(const sim::SimLog& log, const std::string& header, Fn row) {
  std::string out = header + "\n";
  for (const auto& r : log.rows) {
    std::string line = format_double(r.time);
    for (double v : row(r)) {
      line += ',';
      line += format_double(v);
    }
    out += line + "\n";
  }
  return out;
}

}  // namespace

void export_run(const sim::SimLog& log, const MetricsReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const fs::path d(dir);

  write_file(d / "log.csv", to_csv(log));
  write_file(d / "metrics.json", report_json(report));
  write_file(d / "trajectory.csv",
             table(log, "time,X,Y,phi,eeX,eeY,eeZ,tgtX,tgtY,tgtZ", [](const sim::SimRow& r) {
               return std::vector<double>{r.X, r.Y, r.phi, r.ee[0], r.ee[1], r.ee[2], r.tgt[0], r.tgt[1], r.tgt[2]};
             }));
  write_file(d / "ee_error.csv", table(log, "time,errX_mm,errY_mm,errZ_mm", [](const sim::SimRow& r) {
               const Eigen::Vector3d e = (r.ee - r.tgt) * 1e3;
               return std::vector<double>{e[0], e[1], e[2]};
             }));
  write_file(d / "chassis_error.csv", table(log, "time,e1_mm,e2_mm,e3_deg,s1,s2", [](const sim::SimRow& r) {
               return std::vector<double>{m2mm(r.e1), m2mm(r.e2), rad2deg(r.e3), r.s1, r.s2};
             }));
  write_file(d / "torque.csv", table(log, "time,tau1,tau2,tau3,tau4", [](const sim::SimRow& r) {
               return std::vector<double>{r.tau[0], r.tau[1], r.tau[2], r.tau[3]};
             }));
  write_file(d / "wheels.csv", table(log, "time,v,w,vL,vR", [](const sim::SimRow& r) {
               return std::vector<double>{r.v, r.w, r.vL, r.vR};
             }));
}

}  // namespace firebot::metrics
