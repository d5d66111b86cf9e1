#pragma once

#include <string>
#include <vector>

#include "softarm/scenario.hpp"

namespace softarm {

struct StepRecord {
  double t = 0.0;
  Eigen::Vector3d ref = Eigen::Vector3d::Zero();
  Eigen::Vector3d ee = Eigen::Vector3d::Zero();
  Vec q, qd;       // measured state
  Vec u;           // applied pseudo-pressure
  Vec chamber;     // commanded chamber pressures
  double solve_ms = 0.0;
  std::string status = "ok";  // ok | max_iter | fallback
  double slack_norm = 0.0;
  double min_clearance = std::numeric_limits<double>::infinity();

  // diagnostics kept out of the CSV
  bool clamp_active = false;
  bool fallback = false;
  int sqp_iterations = 0;
  double box_violation = 0.0;  // (A_I q - b_I)+ on the measured state
};

struct SimLog {
  int q_size = 0;
  int n_inputs = 0;
  int n_chambers = 0;
  std::vector<StepRecord> records;
};

/// Fixed column order, 9 significant digits, byte-deterministic for a fixed
/// log. With include_timing = false the solve_ms column is written as 0.
void export_csv(const SimLog& log, const std::string& path, bool include_timing = true);

/// Inverse of export_csv for the fixed schema (diagnostic fields excluded).
SimLog parse_csv(const std::string& path, int q_size, int n_inputs, int n_chambers);

struct Metrics {
  int steps = 0;
  double rmse_steady = 0.0;   // tracking error past the transient window
  double max_error = 0.0;
  double min_clearance = std::numeric_limits<double>::infinity();
  double mean_solve_ms = 0.0;
  double max_solve_ms = 0.0;
  int deadline_misses = 0;       // solve time above the sampling period
  int constraint_violations = 0; // applied inputs or chambers out of bounds
  int clamp_active_count = 0;
  int fallback_count = 0;
  double max_slack_norm = 0.0;
  double max_box_violation = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

Metrics compute_metrics(const SimLog& log, const Scenario& scenario);

void write_metrics_json(const Metrics& m, const std::string& path);

}  // namespace softarm
