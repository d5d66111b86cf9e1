#include "softarm/controller.hpp"

#include <chrono>

namespace softarm {

Vec tube_feedback(const Vec& u0, const Mat& gain, const Vec& measured, const Vec& nominal,
                  const Vec& clamp, const Vec& p_min, const Vec& p_max, bool* clamped) {
  Vec p = u0;
  if (gain.size() > 0) p += gain * (measured - nominal);
  bool hit = false;
  for (int i = 0; i < p.size(); ++i) {
    const double lo = u0(i) - clamp(i), hi = u0(i) + clamp(i);
    if (p(i) < lo || p(i) > hi) hit = true;
    p(i) = std::clamp(p(i), lo, hi);
    p(i) = std::clamp(p(i), p_min(i), p_max(i));
  }
  if (clamped) *clamped = hit;
  return p;
}

TubeMpcController::TubeMpcController(const ArmGeometry& geom, const DynamicsParams& params,
                                     const MpcConfig& cfg)
    : geom_(geom), params_(params), cfg_(cfg), chain_(geom) {
  params_.validate(geom_);
  cfg_.validate(geom_);
  reset();
}

void TubeMpcController::reset() {
  state_ = ControllerState{};
  state_.u_old = Vec::Zero(geom_.n_inputs());
  state_.k_tube = Mat::Zero(geom_.n_inputs(), geom_.q_size() * 2);
}

MpcSolution TubeMpcController::shifted_previous() const {
  MpcSolution s = state_.prev;
  const int n = static_cast<int>(s.u.cols());
  for (int k = 0; k + 1 < n; ++k) s.u.col(k) = state_.prev.u.col(k + 1);
  for (int k = 0; k + 1 <= n; ++k) s.x.col(k) = state_.prev.x.col(k + 1);
  // terminal hold
  s.x.col(n) = state_.prev.x.col(n);
  if (s.eps.rows() > 0)
    for (int k = 0; k + 1 < n; ++k) s.eps.col(k) = state_.prev.eps.col(k + 1);
  return s;
}

Vec TubeMpcController::step(const Vec& q, const Vec& qd, const Mat& ref, MpcSolution* solution,
                            StepDiagnostics* diag) {
  const auto t0 = std::chrono::steady_clock::now();
  StepDiagnostics d;

  const auto terms = dynamics_terms(q, qd, chain_, params_);
  const auto ss = continuous_ss(terms);
  const auto dyn = discretize(ss, cfg_.ts, cfg_.exact_drift);

  // tube gain, refreshed each loop unless the linearization barely moved
  Mat k_gain;
  if (cfg_.cache_dare && state_.has_dare_cache &&
      (dyn.A_d - state_.cached_ad).cwiseAbs().maxCoeff() < cfg_.cache_dare_tol) {
    k_gain = state_.cached_k;
  } else {
    const int nx = 2 * geom_.q_size();
    const auto dare = solve_dare(dyn.A_d, dyn.B_d, cfg_.dare_q * Mat::Identity(nx, nx),
                                 cfg_.dare_r * Mat::Identity(geom_.n_inputs(), geom_.n_inputs()));
    if (dare.converged) {
      k_gain = dare.K;
    } else {
      k_gain = Mat::Zero(geom_.n_inputs(), nx);
      d.dare_fallback = true;
    }
    state_.cached_ad = dyn.A_d;
    state_.cached_k = k_gain;
    state_.has_dare_cache = true;
  }
  state_.k_tube = k_gain;

  MpcInstance inst = build_problem(q, qd, ref, dyn, cfg_, geom_, state_.u_old);

  SqpWarmStart warm;
  const bool use_warm = state_.has_prev && !cfg_.cold_start;
  if (use_warm) {
    const MpcSolution shifted = shifted_previous();
    warm.x = shifted.x;
    warm.u = shifted.u;
    warm.eps = shifted.eps;
    warm.admm_dual = state_.prev.admm_dual;
  }
  MpcSolution sol = sqp_solve(inst, use_warm ? &warm : nullptr);

  if (!sol.feasible) {
    d.fallback = true;
    if (state_.has_prev) {
      MpcSolution shifted = shifted_previous();
      shifted.diagnostic = sol.diagnostic;
      shifted.qp_status = sol.qp_status;
      shifted.feasible = false;
      sol = shifted;
    } else {
      sol.x = inst.x0.replicate(1, cfg_.horizon + 1);
      sol.u = state_.u_old.replicate(1, cfg_.horizon);
      sol.eps = Mat::Zero(inst.n_slack_rows(), cfg_.horizon);
    }
    sol.objective = true_cost(inst, sol.x, sol.u, sol.eps);
  }

  Vec x_meas(2 * geom_.q_size());
  x_meas << q, qd;
  const Vec nominal = state_.has_prev ? Vec(state_.prev.x.col(1)) : x_meas;
  bool clamped = false;
  const Vec p_star = tube_feedback(sol.u.col(0), k_gain, x_meas, nominal, cfg_.tube_clamp,
                                   cfg_.p_min, cfg_.p_max, &clamped);
  d.clamp_active = clamped;
  d.qp_status = sol.qp_status;
  d.sqp_iterations = sol.sqp_iterations;
  d.qp_iterations = sol.qp_iterations;
  d.diagnostic = sol.diagnostic;
  d.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  sol.solve_ms = d.solve_ms;

  state_.u_old = p_star;
  state_.prev = sol;
  state_.has_prev = true;

  if (solution) *solution = sol;
  if (diag) *diag = d;
  return p_star;
}

}  // namespace softarm
