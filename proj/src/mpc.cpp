#include "softarm/mpc.hpp"

#include <cmath>

namespace softarm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

MpcConfig MpcConfig::defaults(const ArmGeometry& geom) {
  MpcConfig cfg;
  const int nq = geom.q_size();
  const int nu = geom.n_inputs();
  cfg.s_weight = 1e-2 * Mat::Identity(nq, nq);
  cfg.r_weight = 1e-4 * Mat::Identity(nu, nu);
  cfg.rd_weight = 1e-3 * Mat::Identity(nu, nu);
  cfg.p_min = Vec::Constant(nu, -40.0);
  cfg.p_max = Vec::Constant(nu, 40.0);
  cfg.du_max = Vec::Constant(nu, 15.0);
  cfg.tube_clamp = Vec::Constant(nu, 2.0);
  cfg.x0_box_q = Vec::Constant(nq, 0.05);
  cfg.x0_box_qd = Vec::Constant(nq, 0.5);
  return cfg;
}

void MpcConfig::validate(const ArmGeometry& geom) const {
  const int nq = geom.q_size();
  const int nu = geom.n_inputs();
  if (horizon < 2) throw ConfigError("mpc: horizon must be >= 2");
  if (!(ts > 0.0)) throw ConfigError("mpc: Ts must be > 0");
  if (s_weight.rows() != nq || r_weight.rows() != nu || rd_weight.rows() != nu)
    throw ConfigError("mpc: weight dimensions do not match the geometry");
  if (p_min.size() != nu || p_max.size() != nu || du_max.size() != nu ||
      tube_clamp.size() != nu)
    throw ConfigError("mpc: bound dimensions do not match the geometry");
  for (int i = 0; i < nu; ++i) {
    if (!(p_min(i) < p_max(i))) throw ConfigError("mpc: p_min must be < p_max");
    if (!(du_max(i) > 0.0)) throw ConfigError("mpc: du_max must be > 0");
    if (!(tube_clamp(i) >= 0.0)) throw ConfigError("mpc: tube clamp must be >= 0");
  }
  auto psd = [](const Mat& m, const char* what) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12)
      throw ConfigError(std::string("mpc: ") + what + " must be positive semidefinite");
  };
  psd(q_weight, "Q");
  psd(qn_weight, "Q_N");
  psd(s_weight, "S");
  psd(r_weight, "R");
  psd(rd_weight, "R_delta");
  if (soft) {
    if (soft->a_rows.cols() != nq) throw ConfigError("mpc: soft rows must act on q");
    Eigen::SelfAdjointEigenSolver<Mat> es(soft->penalty, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw ConfigError("mpc: slack penalty must be positive definite");
  }
  if (penalty_gain < 0.0 || penalty_width < 0.0)
    throw ConfigError("mpc: obstacle penalty parameters must be >= 0");
}

MpcInstance build_problem(const Vec& q, const Vec& qd, const Mat& ref, const DiscreteDynamics& dyn,
                          const MpcConfig& cfg, const ArmGeometry& geom, const Vec& u_old) {
  if (ref.rows() != 3 || ref.cols() < cfg.horizon + 1)
    throw RefTooShort("build_problem: reference window must provide N+1 samples");
  MpcInstance inst;
  inst.cfg = cfg;
  inst.dyn = dyn;
  inst.ref = ref.leftCols(cfg.horizon + 1);
  inst.nq = geom.q_size();
  inst.nx = 2 * inst.nq;
  inst.nu = geom.n_inputs();
  inst.x0.resize(inst.nx);
  inst.x0 << q, qd;
  inst.u_old = u_old;
  inst.ee.position = [geom](const Vec& qk) { return forward_kinematics(qk, geom, false).position; };
  inst.ee.jacobian = [geom](const Vec& qk) { return fk_jacobian(qk, geom, false); };
  if (cfg.penalty_gain > 0.0 && !cfg.obstacles.empty())
    add_obstacle_penalty(inst, cfg.obstacles, cfg.penalty_gain, cfg.penalty_width);
  if (cfg.soft) soften_state_constraints(inst, cfg.soft->a_rows, cfg.soft->b_rhs, cfg.soft->penalty);
  return inst;
}

void add_obstacle_penalty(MpcInstance& inst, const std::vector<Obstacle>& obstacles, double gain,
                          double width) {
  if (!(gain > 0.0) || !(width > 0.0))
    throw ConfigError("add_obstacle_penalty: gain and width must be > 0");
  inst.obstacles = obstacles;
  inst.penalty_gain = gain;
  inst.penalty_width = width;
}

void soften_state_constraints(MpcInstance& inst, const Mat& a_rows, const Vec& b_rhs,
                              const Mat& penalty) {
  if (a_rows.rows() != b_rhs.size() || a_rows.cols() != inst.nq)
    throw ConfigError("soften_state_constraints: row dimensions inconsistent");
  Eigen::SelfAdjointEigenSolver<Mat> es(penalty, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw ConfigError("soften_state_constraints: penalty must be positive definite");
  inst.soft = SoftBox{a_rows, b_rhs, penalty};
}

namespace {

// decision vector layout: states 0..N, inputs 0..N-1, slacks 0..N-1
struct Layout {
  int n_steps, nx, nu, ns;
  int ix(int k) const { return k * nx; }
  int iu(int k) const { return (n_steps + 1) * nx + k * nu; }
  int ie(int k) const { return (n_steps + 1) * nx + n_steps * nu + k * ns; }
  int n_vars() const { return (n_steps + 1) * nx + n_steps * (nu + ns); }
};

Layout layout_of(const MpcInstance& inst) {
  return {inst.cfg.horizon, inst.nx, inst.nu, inst.n_slack_rows()};
}

Vec stack(const Layout& lo, const Mat& x, const Mat& u, const Mat& eps) {
  Vec z = Vec::Zero(lo.n_vars());
  for (int k = 0; k <= lo.n_steps; ++k) z.segment(lo.ix(k), lo.nx) = x.col(k);
  for (int k = 0; k < lo.n_steps; ++k) z.segment(lo.iu(k), lo.nu) = u.col(k);
  if (lo.ns > 0)
    for (int k = 0; k < lo.n_steps; ++k) z.segment(lo.ie(k), lo.ns) = eps.col(k);
  return z;
}

void unstack(const Layout& lo, const Vec& z, Mat& x, Mat& u, Mat& eps) {
  x.resize(lo.nx, lo.n_steps + 1);
  u.resize(lo.nu, lo.n_steps);
  eps.resize(lo.ns, lo.n_steps);
  for (int k = 0; k <= lo.n_steps; ++k) x.col(k) = z.segment(lo.ix(k), lo.nx);
  for (int k = 0; k < lo.n_steps; ++k) u.col(k) = z.segment(lo.iu(k), lo.nu);
  if (lo.ns > 0)
    for (int k = 0; k < lo.n_steps; ++k) eps.col(k) = z.segment(lo.ie(k), lo.ns);
}

struct RowFamilies {
  int slew0_begin = 0, slew_begin = 0, bounds_begin = 0, soft_begin = 0, eps_begin = 0, end = 0;
};

// QP of the linearization about the trajectory held in `lin_x`
QpProblem assemble_qp(const MpcInstance& inst, const Mat& lin_x, RowFamilies* fam) {
  const Layout lo = layout_of(inst);
  const int N = lo.n_steps;
  const int nq = inst.nq;
  const int n = lo.n_vars();
  const MpcConfig& cfg = inst.cfg;

  QpProblem p;
  p.H = Mat::Zero(n, n);
  p.f = Vec::Zero(n);

  for (int k = 0; k <= N; ++k) {
    const Vec qk = lin_x.col(k).head(nq);
    const Mat jac = inst.ee.jacobian(qk);
    const Eigen::Vector3d ee = inst.ee.position(qk);
    const Eigen::Matrix3d w = (k == N) ? cfg.qn_weight : cfg.q_weight;
    const Eigen::Vector3d err = ee - inst.ref.col(k);
    p.H.block(lo.ix(k), lo.ix(k), nq, nq) += 2.0 * jac.transpose() * w * jac;
    p.f.segment(lo.ix(k), nq) += 2.0 * jac.transpose() * w * (err - jac * qk);

    // smooth obstacle repulsion enters through its gradient only
    if (inst.penalty_gain > 0.0 && k >= 1 && k < N) {
      for (const auto& ob : inst.obstacles) {
        const Eigen::Vector3d d = ee - ob.center;
        const double v = inst.penalty_gain * std::exp(-inst.penalty_width * d.squaredNorm());
        p.f.segment(lo.ix(k), nq) += -2.0 * inst.penalty_width * v * (jac.transpose() * d);
      }
    }
  }
  for (int k = 0; k < N; ++k) {
    p.H.block(lo.ix(k) + nq, lo.ix(k) + nq, nq, nq) += 2.0 * cfg.s_weight;
    p.H.block(lo.iu(k), lo.iu(k), lo.nu, lo.nu) += 2.0 * cfg.r_weight;
  }
  // input variation: u(0)-u_old, then successive differences
  p.H.block(lo.iu(0), lo.iu(0), lo.nu, lo.nu) += 2.0 * cfg.rd_weight;
  p.f.segment(lo.iu(0), lo.nu) += -2.0 * cfg.rd_weight * inst.u_old;
  for (int k = 1; k < N; ++k) {
    p.H.block(lo.iu(k), lo.iu(k), lo.nu, lo.nu) += 2.0 * cfg.rd_weight;
    p.H.block(lo.iu(k - 1), lo.iu(k - 1), lo.nu, lo.nu) += 2.0 * cfg.rd_weight;
    p.H.block(lo.iu(k), lo.iu(k - 1), lo.nu, lo.nu) -= 2.0 * cfg.rd_weight;
    p.H.block(lo.iu(k - 1), lo.iu(k), lo.nu, lo.nu) -= 2.0 * cfg.rd_weight;
  }
  if (lo.ns > 0) {
    for (int k = 0; k < N; ++k)
      p.H.block(lo.ie(k), lo.ie(k), lo.ns, lo.ns) += 2.0 * inst.soft->penalty;
  }
  // the task-space Hessian is rank deficient in q; keep H strictly PSD
  p.H.diagonal().array() += 1e-9;

  // equalities: pinned initial state, dynamics recursion, terminal rest
  const int n_eq = lo.nx + N * lo.nx + nq;
  p.A_eq = Mat::Zero(n_eq, n);
  p.b_eq = Vec::Zero(n_eq);
  p.A_eq.block(0, lo.ix(0), lo.nx, lo.nx).setIdentity();
  p.b_eq.head(lo.nx) = inst.x0;
  for (int k = 0; k < N; ++k) {
    const int r = lo.nx + k * lo.nx;
    p.A_eq.block(r, lo.ix(k + 1), lo.nx, lo.nx).setIdentity();
    p.A_eq.block(r, lo.ix(k), lo.nx, lo.nx) = -inst.dyn.A_d;
    p.A_eq.block(r, lo.iu(k), lo.nx, lo.nu) = -inst.dyn.B_d;
    p.b_eq.segment(r, lo.nx) = inst.dyn.W_d;
  }
  p.A_eq.block(lo.nx + N * lo.nx, lo.ix(N) + nq, nq, nq).setIdentity();

  // inequalities
  const int win = cfg.input_window();
  const int n_in = lo.nu + win * lo.nu + win * lo.nu + N * lo.ns + N * lo.ns;
  p.A_in = Mat::Zero(n_in, n);
  p.lower = Vec::Constant(n_in, -kInf);
  p.upper = Vec::Constant(n_in, kInf);
  int r = 0;
  RowFamilies f;
  f.slew0_begin = r;
  p.A_in.block(r, lo.iu(0), lo.nu, lo.nu).setIdentity();
  p.lower.segment(r, lo.nu) = inst.u_old - cfg.du_max;
  p.upper.segment(r, lo.nu) = inst.u_old + cfg.du_max;
  r += lo.nu;
  f.slew_begin = r;
  for (int k = 0; k < win; ++k) {
    p.A_in.block(r, lo.iu(k + 1), lo.nu, lo.nu).setIdentity();
    p.A_in.block(r, lo.iu(k), lo.nu, lo.nu) -= Mat::Identity(lo.nu, lo.nu);
    p.lower.segment(r, lo.nu) = -cfg.du_max;
    p.upper.segment(r, lo.nu) = cfg.du_max;
    r += lo.nu;
  }
  f.bounds_begin = r;
  for (int k = 0; k < win; ++k) {
    p.A_in.block(r, lo.iu(k), lo.nu, lo.nu).setIdentity();
    p.lower.segment(r, lo.nu) = cfg.p_min;
    p.upper.segment(r, lo.nu) = cfg.p_max;
    r += lo.nu;
  }
  f.soft_begin = r;
  if (lo.ns > 0) {
    for (int k = 0; k < N; ++k) {
      p.A_in.block(r, lo.ix(k), lo.ns, nq) = inst.soft->a_rows;
      p.A_in.block(r, lo.ie(k), lo.ns, lo.ns) = -Mat::Identity(lo.ns, lo.ns);
      p.upper.segment(r, lo.ns) = inst.soft->b_rhs;
      r += lo.ns;
    }
  }
  f.eps_begin = r;
  if (lo.ns > 0) {
    for (int k = 0; k < N; ++k) {
      p.A_in.block(r, lo.ie(k), lo.ns, lo.ns).setIdentity();
      p.lower.segment(r, lo.ns).setZero();
      r += lo.ns;
    }
  }
  f.end = r;
  if (fam) *fam = f;
  return p;
}

std::string violation_family(const MpcInstance& inst, const QpProblem& p, const RowFamilies& fam,
                             const Vec& z) {
  const Layout lo = layout_of(inst);
  double worst = 0.0;
  std::string name = "unknown";
  auto consider = [&](double v, const char* what) {
    if (v > worst) {
      worst = v;
      name = what;
    }
  };
  const Vec eq = p.A_eq * z - p.b_eq;
  consider(eq.head(lo.nx).cwiseAbs().maxCoeff(), "initial-state");
  consider(eq.segment(lo.nx, lo.n_steps * lo.nx).cwiseAbs().maxCoeff(), "dynamics");
  consider(eq.tail(inst.nq).cwiseAbs().maxCoeff(), "terminal");
  const Vec ax = p.A_in * z;
  auto range_viol = [&](int begin, int end) {
    double v = 0.0;
    for (int i = begin; i < end; ++i) {
      if (std::isfinite(p.lower(i))) v = std::max(v, p.lower(i) - ax(i));
      if (std::isfinite(p.upper(i))) v = std::max(v, ax(i) - p.upper(i));
    }
    return v;
  };
  consider(range_viol(fam.slew0_begin, fam.slew_begin), "input-slew-first");
  consider(range_viol(fam.slew_begin, fam.bounds_begin), "input-slew");
  consider(range_viol(fam.bounds_begin, fam.soft_begin), "input-bounds");
  consider(range_viol(fam.soft_begin, fam.eps_begin), "soft-state");
  consider(range_viol(fam.eps_begin, fam.end), "slack-positivity");
  return name;
}

}  // namespace

double true_cost(const MpcInstance& inst, const Mat& x, const Mat& u, const Mat& eps) {
  const int N = inst.cfg.horizon;
  const int nq = inst.nq;
  double cost = 0.0;
  for (int k = 0; k <= N; ++k) {
    const Eigen::Vector3d err = inst.ee.position(x.col(k).head(nq)) - inst.ref.col(k);
    const Eigen::Matrix3d w = (k == N) ? inst.cfg.qn_weight : inst.cfg.q_weight;
    cost += err.dot(w * err);
    if (k < N) {
      const Vec qd = x.col(k).tail(nq);
      cost += qd.dot(inst.cfg.s_weight * qd);
      cost += u.col(k).dot(inst.cfg.r_weight * u.col(k));
      const Vec du = (k == 0) ? Vec(u.col(0) - inst.u_old) : Vec(u.col(k) - u.col(k - 1));
      cost += du.dot(inst.cfg.rd_weight * du);
      if (inst.penalty_gain > 0.0) {
        const Eigen::Vector3d ee = inst.ee.position(x.col(k).head(nq));
        for (const auto& ob : inst.obstacles)
          cost += inst.penalty_gain *
                  std::exp(-inst.penalty_width * (ee - ob.center).squaredNorm());
      }
      if (inst.soft) cost += eps.col(k).dot(inst.soft->penalty * eps.col(k));
    }
  }
  return cost;
}

double dynamics_residual(const MpcInstance& inst, const Mat& x, const Mat& u) {
  double res = 0.0;
  for (int k = 0; k < inst.cfg.horizon; ++k) {
    const Vec pred = inst.dyn.A_d * x.col(k) + inst.dyn.B_d * u.col(k) + inst.dyn.W_d;
    res = std::max(res, (x.col(k + 1) - pred).cwiseAbs().maxCoeff());
  }
  return res;
}

namespace {

// whether a trajectory satisfies every constraint of the instance; a feasible
// warm start becomes the initial incumbent of the outer loop
bool trajectory_feasible(const MpcInstance& inst, const Mat& x, const Mat& u, const Mat& eps,
                         double tol) {
  const int N = inst.cfg.horizon;
  if (x.cols() != N + 1 || u.cols() != N) return false;
  if ((x.col(0) - inst.x0).cwiseAbs().maxCoeff() > tol) return false;
  if (dynamics_residual(inst, x, u) > tol) return false;
  if (x.col(N).tail(inst.nq).cwiseAbs().maxCoeff() > tol) return false;
  const int win = inst.cfg.input_window();
  if (((u.col(0) - inst.u_old).cwiseAbs() - inst.cfg.du_max).maxCoeff() > tol) return false;
  for (int k = 0; k < win; ++k) {
    if (((u.col(k + 1) - u.col(k)).cwiseAbs() - inst.cfg.du_max).maxCoeff() > tol) return false;
    if ((u.col(k) - inst.cfg.p_max).maxCoeff() > tol) return false;
    if ((inst.cfg.p_min - u.col(k)).maxCoeff() > tol) return false;
  }
  if (inst.soft) {
    if (eps.rows() != inst.soft->a_rows.rows()) return false;
    for (int k = 0; k < N; ++k) {
      if (eps.col(k).minCoeff() < -tol) return false;
      const Vec lhs = inst.soft->a_rows * x.col(k).head(inst.nq) - eps.col(k);
      if ((lhs - inst.soft->b_rhs).maxCoeff() > tol) return false;
    }
  }
  return true;
}

}  // namespace

MpcSolution sqp_solve(const MpcInstance& inst, const SqpWarmStart* warm) {
  const Layout lo = layout_of(inst);
  const int N = lo.n_steps;
  MpcSolution out;

  // initial trajectory: warm start, or the measured state held over the
  // horizon with zero inputs
  Mat x(lo.nx, N + 1), u(lo.nu, N), eps(lo.ns, N);
  if (warm && warm->x.cols() == N + 1 && !inst.cfg.cold_start) {
    x = warm->x;
    u = warm->u;
    eps = (warm->eps.rows() == lo.ns) ? warm->eps : Mat::Zero(lo.ns, N);
  } else {
    x = inst.x0.replicate(1, N + 1);
    u.setZero();
    eps.setZero();
  }

  Vec dual = (warm && warm->admm_dual.size() > 0) ? warm->admm_dual : Vec();
  bool have_incumbent = false;
  double best_cost = 0.0;
  Mat best_x, best_u, best_eps;
  QpStatus last_status = QpStatus::MaxIter;
  int qp_iters = 0;

  if (warm && trajectory_feasible(inst, x, u, eps, 1e-7)) {
    best_x = x;
    best_u = u;
    best_eps = eps;
    best_cost = true_cost(inst, x, u, eps);
    have_incumbent = true;
    last_status = QpStatus::Optimal;
  }

  for (int outer = 0; outer < inst.cfg.sqp.max_outer; ++outer) {
    RowFamilies fam;
    const Mat& lin = have_incumbent ? best_x : x;
    QpProblem qp = assemble_qp(inst, lin, &fam);
    QpWarmStart ws;
    ws.primal = stack(lo, have_incumbent ? best_x : x, have_incumbent ? best_u : u,
                      have_incumbent ? best_eps : eps);
    if (dual.size() == qp.A_eq.rows() + qp.A_in.rows()) ws.dual = dual;
    const QpSolution sol = solve_qp(qp, inst.cfg.qp, &ws);
    qp_iters += sol.iterations;
    last_status = sol.status;
    if (sol.status == QpStatus::Infeasible) {
      out.feasible = have_incumbent;
      out.qp_status = QpStatus::Infeasible;
      out.diagnostic = "infeasible: " + violation_family(inst, qp, fam, sol.primal);
      break;
    }
    dual.resize(qp.A_eq.rows() + qp.A_in.rows());
    dual << sol.dual_eq, sol.dual_in;

    Mat cx, cu, ce;
    unstack(lo, sol.primal, cx, cu, ce);
    const double cand_cost = true_cost(inst, cx, cu, ce);

    if (!have_incumbent) {
      best_x = cx;
      best_u = cu;
      best_eps = ce;
      best_cost = cand_cost;
      have_incumbent = true;
      out.sqp_iterations = outer + 1;
      continue;
    }
    double accepted_cost = best_cost;
    bool accepted = false;
    if (cand_cost < best_cost) {
      best_x = cx;
      best_u = cu;
      best_eps = ce;
      accepted_cost = cand_cost;
      accepted = true;
    } else {
      double alpha = 0.5;
      for (int bt = 0; bt < inst.cfg.sqp.max_backtrack; ++bt, alpha *= 0.5) {
        const Mat bx = best_x + alpha * (cx - best_x);
        const Mat bu = best_u + alpha * (cu - best_u);
        const Mat be = best_eps + alpha * (ce - best_eps);
        const double bc = true_cost(inst, bx, bu, be);
        if (bc < best_cost) {
          best_x = bx;
          best_u = bu;
          best_eps = be;
          accepted_cost = bc;
          accepted = true;
          break;
        }
      }
    }
    out.sqp_iterations = outer + 1;
    const double decrease = best_cost - accepted_cost;
    best_cost = accepted_cost;
    if (!accepted || decrease < inst.cfg.sqp.tol * std::max(1.0, std::abs(best_cost))) break;
  }

  if (have_incumbent) {
    out.x = best_x;
    out.u = best_u;
    out.eps = best_eps;
    out.objective = best_cost;
    out.feasible = true;
    if (out.qp_status != QpStatus::Infeasible) out.qp_status = last_status;
  }
  out.qp_iterations = qp_iters;
  out.admm_dual = dual;
  return out;
}

}  // namespace softarm
