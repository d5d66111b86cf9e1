#pragma once

#include <functional>
#include <optional>
#include <string>

#include "softarm/arm_model.hpp"
#include "softarm/linearization.hpp"
#include "softarm/qp.hpp"

namespace softarm {

struct Obstacle {
  Eigen::Vector3d center;
  double radius = 0.0;  // used by clearance metrics and the offline search
};

struct SoftBox {
  Mat a_rows;   // A_I
  Vec b_rhs;    // b_I
  Mat penalty;  // E, positive definite
};

struct SqpSettings {
  double tol = 1e-8;      // stop when the true cost decrease falls below
  int max_outer = 8;
  int max_backtrack = 5;  // step-halving trials per outer iteration
};

struct MpcConfig {
  int horizon = 7;
  double ts = 1.0 / 15.0;

  Eigen::Matrix3d q_weight = 1e4 * Eigen::Matrix3d::Identity();
  Eigen::Matrix3d qn_weight = 1e4 * Eigen::Matrix3d::Identity();
  Mat s_weight;   // q_size x q_size velocity regularization
  Mat r_weight;   // input magnitude
  Mat rd_weight;  // input variation

  Vec p_min, p_max;  // per channel
  Vec du_max;        // per-step slew
  Vec tube_clamp;    // max |p* - u(0)| per channel
  Vec x0_box_q, x0_box_qd;  // initial-polytope half widths (tube neighborhood)

  std::vector<Obstacle> obstacles;
  double penalty_gain = 0.0;   // L
  double penalty_width = 0.0;  // l
  std::optional<SoftBox> soft;

  double dare_q = 1.0;
  double dare_r = 10.0;

  bool floor_horizon_window = false;  // constraint window N/4: floor instead of ceil
  bool cold_start = false;            // re-initialize from the measurement每 step
  bool exact_drift = false;
  bool cache_dare = false;
  double cache_dare_tol = 1e-3;

  QpSettings qp;
  SqpSettings sqp;

  /// Fills state-dependent weight/bound sizes with defaults for the geometry.
  static MpcConfig defaults(const ArmGeometry& geom);
  void validate(const ArmGeometry& geom) const;

  int input_window() const {  // steps with hard input constraints
    return std::max(1, floor_horizon_window ? horizon / 4 : (horizon + 3) / 4);
  }
};

/// End-effector model used inside the optimization (position + Jacobian);
/// injected so tests can exercise the solver on exactly linear kinematics.
struct EeModel {
  std::function<Eigen::Vector3d(const Vec&)> position;
  std::function<Mat(const Vec&)> jacobian;
};

/// One controller step's optimization data: frozen model, reference window
/// and limits. Obstacle and soft-constraint shaping are applied by the two
/// dedicated operations below.
struct MpcInstance {
  MpcConfig cfg;
  DiscreteDynamics dyn;
  Mat ref;    // 3 x (N+1)
  Vec x0;     // measured (q, qd)
  Vec u_old;  // previously applied input
  EeModel ee;
  int nx = 0, nu = 0, nq = 0;

  std::vector<Obstacle> obstacles;  // penalty method
  double penalty_gain = 0.0, penalty_width = 0.0;
  std::optional<SoftBox> soft;

  int n_slack_rows() const { return soft ? static_cast<int>(soft->a_rows.rows()) : 0; }
};

MpcInstance build_problem(const Vec& q, const Vec& qd, const Mat& ref, const DiscreteDynamics& dyn,
                          const MpcConfig& cfg, const ArmGeometry& geom, const Vec& u_old);

/// Adds the smooth repulsion cost sum_k sum_i L exp(-l |E(k) - o_i|^2).
void add_obstacle_penalty(MpcInstance& inst, const std::vector<Obstacle>& obstacles, double gain,
                          double width);

/// Relaxes A_I q(k) < b_I with slack variables penalized by E. Input
/// constraints are never softened.
void soften_state_constraints(MpcInstance& inst, const Mat& a_rows, const Vec& b_rhs,
                              const Mat& penalty);

struct MpcSolution {
  Mat x;    // nx x (N+1), satisfies the frozen dynamics
  Mat u;    // nu x N
  Mat eps;  // slack, ns x N (0 rows when hard)
  double objective = 0.0;  // exact cost of the returned trajectory
  bool feasible = false;
  QpStatus qp_status = QpStatus::MaxIter;
  int sqp_iterations = 0;
  int qp_iterations = 0;
  double solve_ms = 0.0;
  std::string diagnostic;
  Vec admm_dual;  // constraint multipliers, reused as next-step warm start
};

/// Warm-start trajectory (normally the previous solution shifted one step).
struct SqpWarmStart {
  Mat x, u, eps;
  Vec admm_dual;
};

/// Outer linearization loop: linearize the end-effector map about the
/// incumbent trajectory, solve the QP, and accept via step-halving on the
/// exact cost. Deterministic for identical inputs.
MpcSolution sqp_solve(const MpcInstance& inst, const SqpWarmStart* warm = nullptr);

/// Exact cost of a trajectory under the instance's weights and penalties.
double true_cost(const MpcInstance& inst, const Mat& x, const Mat& u, const Mat& eps);

/// Max violation of the frozen dynamics recursion over the trajectory.
double dynamics_residual(const MpcInstance& inst, const Mat& x, const Mat& u);

}  // namespace softarm
