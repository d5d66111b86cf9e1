#include "softarm/sim_log.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace softarm {

namespace {

void append_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  out += buf;
}

}  // namespace

void export_csv(const SimLog& log, const std::string& path, bool include_timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("export_csv: cannot write '" + path + "'");

  std::string line = "t,ref_x,ref_y,ref_z,ee_x,ee_y,ee_z";
  for (int i = 0; i < log.q_size; ++i) line += ",q_" + std::to_string(i);
  for (int i = 0; i < log.q_size; ++i) line += ",qd_" + std::to_string(i);
  for (int i = 0; i < log.n_inputs; ++i) line += ",u_" + std::to_string(i);
  for (int i = 0; i < log.n_chambers; ++i) line += ",chamber_" + std::to_string(i);
  line += ",solve_ms,status,slack_norm,min_clearance\n";
  out << line;

  for (const auto& r : log.records) {
    line.clear();
    append_number(line, r.t);
    for (int i = 0; i < 3; ++i) {
      line += ',';
      append_number(line, r.ref(i));
    }
    for (int i = 0; i < 3; ++i) {
      line += ',';
      append_number(line, r.ee(i));
    }
    for (int i = 0; i < log.q_size; ++i) {
      line += ',';
      append_number(line, r.q(i));
    }
    for (int i = 0; i < log.q_size; ++i) {
      line += ',';
      append_number(line, r.qd(i));
    }
    for (int i = 0; i < log.n_inputs; ++i) {
      line += ',';
      append_number(line, r.u(i));
    }
    for (int i = 0; i < log.n_chambers; ++i) {
      line += ',';
      append_number(line, r.chamber(i));
    }
    line += ',';
    append_number(line, include_timing ? r.solve_ms : 0.0);
    line += ',' + r.status + ',';
    append_number(line, r.slack_norm);
    line += ',';
    append_number(line, r.min_clearance);
    line += '\n';
    out << line;
  }
}

SimLog parse_csv(const std::string& path, int q_size, int n_inputs, int n_chambers) {
  std::ifstream in(path);
  if (!in) throw IoError("parse_csv: cannot open '" + path + "'");
  SimLog log;
  log.q_size = q_size;
  log.n_inputs = n_inputs;
  log.n_chambers = n_chambers;

  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    auto next_number = [&]() {
      if (!std::getline(ss, cell, ',')) throw IoError("parse_csv: truncated row");
      return std::strtod(cell.c_str(), nullptr);
    };
    StepRecord r;
    r.q.resize(q_size);
    r.qd.resize(q_size);
    r.u.resize(n_inputs);
    r.chamber.resize(n_chambers);
    r.t = next_number();
    for (int i = 0; i < 3; ++i) r.ref(i) = next_number();
    for (int i = 0; i < 3; ++i) r.ee(i) = next_number();
    for (int i = 0; i < q_size; ++i) r.q(i) = next_number();
    for (int i = 0; i < q_size; ++i) r.qd(i) = next_number();
    for (int i = 0; i < n_inputs; ++i) r.u(i) = next_number();
    for (int i = 0; i < n_chambers; ++i) r.chamber(i) = next_number();
    r.solve_ms = next_number();
    if (!std::getline(ss, r.status, ',')) throw IoError("parse_csv: truncated row");
    r.slack_norm = next_number();
    r.min_clearance = next_number();
    log.records.push_back(std::move(r));
  }
  return log;
}

Metrics compute_metrics(const SimLog& log, const Scenario& scenario) {
  Metrics m;
  m.steps = static_cast<int>(log.records.size());
  const double ts_ms = 1000.0 * scenario.ts();

  double sq_sum = 0.0;
  int steady = 0;
  double solve_sum = 0.0;
  for (const auto& r : log.records) {
    const double err = (r.ee - r.ref).norm();
    m.max_error = std::max(m.max_error, err);
    if (r.t >= scenario.transient_exclusion) {
      sq_sum += err * err;
      ++steady;
    }
    m.min_clearance = std::min(m.min_clearance, r.min_clearance);
    solve_sum += r.solve_ms;
    m.max_solve_ms = std::max(m.max_solve_ms, r.solve_ms);
    if (r.solve_ms > ts_ms) ++m.deadline_misses;
    for (int i = 0; i < r.u.size(); ++i)
      if (r.u(i) < scenario.mpc.p_min(i) - 1e-9 || r.u(i) > scenario.mpc.p_max(i) + 1e-9)
        ++m.constraint_violations;
    for (int i = 0; i < r.chamber.size(); ++i)
      if (r.chamber(i) < -1e-9 || r.chamber(i) > scenario.plant.chamber_max + 1e-9)
        ++m.constraint_violations;
    m.clamp_active_count += r.clamp_active ? 1 : 0;
    m.fallback_count += r.fallback ? 1 : 0;
    m.max_slack_norm = std::max(m.max_slack_norm, r.slack_norm);
    m.max_box_violation = std::max(m.max_box_violation, r.box_violation);
  }
  if (steady > 0) m.rmse_steady = std::sqrt(sq_sum / steady);
  if (m.steps > 0) m.mean_solve_ms = solve_sum / m.steps;
  return m;
}

void write_metrics_json(const Metrics& m, const std::string& path) {
  nlohmann::json j;
  j["steps"] = m.steps;
  j["rmse_steady"] = m.rmse_steady;
  j["max_error"] = m.max_error;
  j["min_clearance"] =
      std::isfinite(m.min_clearance) ? nlohmann::json(m.min_clearance) : nlohmann::json();
  j["mean_solve_ms"] = m.mean_solve_ms;
  j["max_solve_ms"] = m.max_solve_ms;
  j["deadline_misses"] = m.deadline_misses;
  j["constraint_violations"] = m.constraint_violations;
  j["clamp_active_count"] = m.clamp_active_count;
  j["fallback_count"] = m.fallback_count;
  j["max_slack_norm"] = m.max_slack_norm;
  j["max_box_violation"] = m.max_box_violation;
  j["aborted"] = m.aborted;
  if (m.aborted) j["abort_reason"] = m.abort_reason;
  std::ofstream out(path);
  if (!out) throw IoError("write_metrics_json: cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

}  // namespace softarm
