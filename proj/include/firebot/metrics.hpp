#pragma once

#include "firebot/simulation.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace firebot::metrics {

class EmptyLog : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Error band used for the chassis convergence time.
struct Band {
  double e1 = 0.020;          // m
  double e2 = 0.001;          // m
  double e3 = deg2rad(0.6);   // rad
};

struct MetricsReport {
  std::array<double, 3> ee_avg_mm{};  // X, Y, Z over Stage I sweep rows
  std::array<double, 3> ee_max_mm{};
  std::size_t sweep_samples = 0;
  double chassis_max_e1_mm = 0.0;  // over Stage I
  double chassis_max_e2_mm = 0.0;
  double chassis_max_e3_deg = 0.0;
  double convergence_time = 0.0;  // s from the start of Stage I; negative if never inside the band
  std::vector<double> edge_times;  // s, K_i to K_{i+1}
  double stage1_time = 0.0;
  double top_spray_time = 0.0;
  double stage2_time = 0.0;
  double mission_time = 0.0;
  double discharge_time = 0.0;
  bool within_discharge = false;

  bool operator==(const MetricsReport&) const = default;
};

MetricsReport compute_metrics(const sim::SimLog& log, const Band& band = {});

/// Fixed column set of the time-series export.
const std::vector<std::string>& csv_columns();

/// Shortest round-trip text for a double.
std::string format_double(double v);

std::string to_csv(const sim::SimLog& log);
sim::SimLog from_csv(const std::string& text);  // throws std::invalid_argument on malformed input

std::string report_json(const MetricsReport& report);

/// Writes log.csv, metrics.json and the per-figure data files into dir.
void export_run(const sim::SimLog& log, const MetricsReport& report, const std::string& dir);

}  // namespace firebot::metrics
