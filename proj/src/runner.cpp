#include "softarm/runner.hpp"

#include <chrono>
#include <cmath>

#include "softarm/controller.hpp"

namespace softarm {

namespace {

double clearance_of(const Vec& q, const ArmGeometry& geom, const std::vector<Obstacle>& obstacles) {
  if (obstacles.empty()) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  const auto probes = collision_probes(q, geom);
  for (std::size_t p = 1; p < probes.size(); ++p)
    for (const auto& ob : obstacles)
      best = std::min(best, (probes[p] - ob.center).norm() - ob.radius);
  return best;
}

double box_violation_of(const Vec& q, const MpcConfig& cfg) {
  if (!cfg.soft) return 0.0;
  return std::max(0.0, (cfg.soft->a_rows * q - cfg.soft->b_rhs).maxCoeff());
}

}  // namespace

RunResult run_scenario(const Scenario& scenario) {
  scenario.validate();
  const double ts = scenario.ts();
  const int steps = static_cast<int>(std::llround(scenario.duration * scenario.rate_hz));

  RunResult out;
  out.log.q_size = scenario.geometry.q_size();
  out.log.n_inputs = scenario.geometry.n_inputs();
  out.log.n_chambers = 3 * scenario.geometry.n_segments;

  const TrajectoryRef traj = make_trajectory(scenario.trajectory);
  Plant plant(scenario.geometry, scenario.dynamics, scenario.plant, scenario.seed);

  const bool is_mpc = scenario.controller != ControllerType::QuasiStatic;
  std::optional<TubeMpcController> mpc;
  std::optional<QuasiStaticController> qs;
  if (is_mpc) {
    mpc.emplace(scenario.geometry, scenario.dynamics, scenario.mpc);
  } else {
    qs.emplace(scenario.geometry, scenario.dynamics, scenario.quasi_static);
  }

  for (int k = 0; k < steps; ++k) {
    const double t = k * ts;
    StepRecord rec;
    rec.t = t;
    rec.ref = traj.position(t);

    const auto [q_m, qd_m] = plant.observe();
    rec.q = q_m;
    rec.qd = qd_m;

    Vec pseudo;
    if (is_mpc) {
      const Mat ref_win = traj.window(t, ts, scenario.mpc.horizon + 1);
      MpcSolution sol;
      StepDiagnostics diag;
      try {
        pseudo = mpc->step(q_m, qd_m, ref_win, &sol, &diag);
      } catch (const std::exception& e) {
        out.aborted = true;
        out.abort_reason = std::string("controller: ") + e.what();
        break;
      }
      rec.solve_ms = scenario.log_timing ? diag.solve_ms : 0.0;
      rec.status = diag.fallback ? "fallback"
                   : (diag.qp_status == QpStatus::MaxIter ? "max_iter" : "ok");
      rec.slack_norm = sol.eps.size() > 0 ? sol.eps.norm() : 0.0;
      rec.clamp_active = diag.clamp_active;
      rec.fallback = diag.fallback;
      rec.sqp_iterations = diag.sqp_iterations;
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      pseudo = qs->step(q_m, rec.ref);
      rec.solve_ms =
          scenario.log_timing
              ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count()
              : 0.0;
      rec.status = "ok";
    }
    rec.u = pseudo;
    rec.chamber = pseudo_to_chamber(pseudo, scenario.geometry);

    try {
      plant.step(rec.chamber, ts);
    } catch (const std::exception& e) {  // divergence or degenerate dynamics
      rec.ee = plant.tip();
      out.log.records.push_back(std::move(rec));
      out.aborted = true;
      out.abort_reason = e.what();
      break;
    }
    rec.ee = plant.tip();
    rec.min_clearance = clearance_of(plant.q(), scenario.geometry, scenario.obstacles);
    rec.box_violation = box_violation_of(plant.q(), scenario.mpc);
    out.log.records.push_back(std::move(rec));
  }

  out.metrics = compute_metrics(out.log, scenario);
  out.metrics.aborted = out.aborted;
  out.metrics.abort_reason = out.abort_reason;
  return out;
}

}  // namespace softarm
