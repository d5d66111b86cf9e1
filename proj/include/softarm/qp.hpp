#pragma once

#include <vector>

#include "softarm/arm_model.hpp"

namespace softarm {

/// min 1/2 x'Hx + f'x  s.t.  A_eq x = b_eq,  lower <= A_in x <= upper
struct QpProblem {
  Mat H;
  Vec f;
  Mat A_eq;
  Vec b_eq;
  Mat A_in;
  Vec lower, upper;

  int n_vars() const { return static_cast<int>(H.rows()); }
  /// Shape/symmetry/PSD checks (PSD up to -1e-9); throws std::invalid_argument.
  void validate() const;
};

enum class QpStatus { Optimal, MaxIter, Infeasible };

struct QpSolution {
  Vec primal;
  double objective = 0.0;
  QpStatus status = QpStatus::MaxIter;
  int iterations = 0;
  Vec dual_eq;                  // multipliers for A_eq rows
  Vec dual_in;                  // multipliers for A_in rows (+ upper, - lower)
  std::vector<int> active_set;  // inequality rows at a bound at the solution
};

struct QpSettings {
  double tol_feas = 1e-6;
  double tol_stat = 1e-6;
  int max_iter = 20000;
  double rho = 0.1;        // ADMM penalty (auto-scaled by residual balancing)
  double sigma = 1e-6;     // proximal regularization
  double alpha = 1.6;      // over-relaxation
  bool adaptive_rho = true;
  bool polish = true;      // active-set KKT refinement of the converged iterate
};

struct QpWarmStart {
  Vec primal;
  Vec dual;  // stacked [eq; in] row multipliers
};

QpSolution solve_qp(const QpProblem& p, const QpSettings& s, const QpWarmStart* warm = nullptr);

/// KKT residuals recomputed from scratch, independent of solver internals.
/// Primal residuals are absolute; stationarity is scaled by the gradient
/// magnitude, matching the solver's termination test.
struct KktResiduals {
  double primal_eq = 0.0;   // max |A_eq x - b_eq|
  double primal_in = 0.0;   // max bound violation
  double stationarity = 0.0;
  double complementarity = 0.0;
};
KktResiduals kkt_residuals(const QpProblem& p, const Vec& x, const Vec& dual_eq, const Vec& dual_in);

}  // namespace softarm
