#include "softarm/qp.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace softarm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEqRhoScale = 1e3;  // stiffer penalty on equality rows

struct Stacked {
  Mat a;
  Vec l, u;
  Vec rho;  // per-row penalty
  int n_eq = 0;
};

Stacked stack_rows(const QpProblem& p, double rho) {
  const int ne = static_cast<int>(p.A_eq.rows());
  const int ni = static_cast<int>(p.A_in.rows());
  Stacked s;
  s.n_eq = ne;
  s.a.resize(ne + ni, p.n_vars());
  s.l.resize(ne + ni);
  s.u.resize(ne + ni);
  s.rho.resize(ne + ni);
  if (ne > 0) {
    s.a.topRows(ne) = p.A_eq;
    s.l.head(ne) = p.b_eq;
    s.u.head(ne) = p.b_eq;
    s.rho.head(ne).setConstant(rho * kEqRhoScale);
  }
  if (ni > 0) {
    s.a.bottomRows(ni) = p.A_in;
    s.l.tail(ni) = p.lower;
    s.u.tail(ni) = p.upper;
    s.rho.tail(ni).setConstant(rho);
  }
  return s;
}

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// KKT refinement on the active set; returns true when the refined point is
// feasible and strictly improves stationarity.
bool polish(const QpProblem& p, const Stacked& s, const QpSettings& cfg, Vec& x, Vec& y) {
  const int n = p.n_vars();
  const int m = static_cast<int>(s.a.rows());

  std::vector<int> act;
  std::vector<double> act_rhs;
  const Vec ax = s.a * x;
  for (int i = 0; i < m; ++i) {
    const bool eq = i < s.n_eq;
    const double tol = 1e-6 * (1.0 + std::min(std::abs(s.l(i)), std::abs(s.u(i))));
    if (eq || (std::isfinite(s.l(i)) && ax(i) - s.l(i) < tol && y(i) <= 0.0)) {
      act.push_back(i);
      act_rhs.push_back(s.l(i));
    } else if (std::isfinite(s.u(i)) && s.u(i) - ax(i) < tol && y(i) >= 0.0) {
      act.push_back(i);
      act_rhs.push_back(s.u(i));
    }
  }
  const int na = static_cast<int>(act.size());
  Mat kkt0 = Mat::Zero(n + na, n + na);
  kkt0.topLeftCorner(n, n) = p.H;
  for (int k = 0; k < na; ++k) {
    kkt0.block(0, n + k, n, 1) = s.a.row(act[k]).transpose();
    kkt0.block(n + k, 0, 1, n) = s.a.row(act[k]);
  }
  Mat kkt_reg = kkt0;
  kkt_reg.topLeftCorner(n, n).diagonal().array() += 1e-11;
  kkt_reg.bottomRightCorner(na, na).diagonal().array() -= 1e-11;
  Vec rhs(n + na);
  rhs.head(n) = -p.f;
  for (int k = 0; k < na; ++k) rhs(n + k) = act_rhs[k];

  Eigen::PartialPivLU<Mat> lu(kkt_reg);
  Vec sol = lu.solve(rhs);
  if (!sol.allFinite()) return false;
  // iterative refinement against the unregularized system
  for (int pass = 0; pass < 3; ++pass) sol += lu.solve(rhs - kkt0 * sol);
  if (!sol.allFinite()) return false;

  const Vec x_new = sol.head(n);
  Vec y_new = Vec::Zero(m);
  for (int k = 0; k < na; ++k) y_new(act[k]) = sol(n + k);

  auto violation = [&](const Vec& xc) {
    const Vec axc = s.a * xc;
    double v = 0.0;
    for (int i = 0; i < m; ++i) {
      if (std::isfinite(s.l(i))) v = std::max(v, s.l(i) - axc(i));
      if (std::isfinite(s.u(i))) v = std::max(v, axc(i) - s.u(i));
    }
    return v;
  };
  const double err_old = std::max(violation(x), inf_norm(p.H * x + p.f + s.a.transpose() * y));
  const double err_new =
      std::max(violation(x_new), inf_norm(p.H * x_new + p.f + s.a.transpose() * y_new));
  if (err_new <= std::max(err_old, 1e-12)) {
    x = x_new;
    y = y_new;
    return true;
  }
  return false;
}

}  // namespace

void QpProblem::validate() const {
  const int n = n_vars();
  if (H.cols() != n || f.size() != n) throw std::invalid_argument("qp: H/f dimension mismatch");
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + H.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("qp: H must be symmetric");
  if (A_eq.rows() != b_eq.size()) throw std::invalid_argument("qp: equality rows mismatch");
  if (A_eq.rows() > 0 && A_eq.cols() != n) throw std::invalid_argument("qp: A_eq column mismatch");
  if (A_in.rows() != lower.size() || A_in.rows() != upper.size())
    throw std::invalid_argument("qp: inequality rows mismatch");
  if (A_in.rows() > 0 && A_in.cols() != n) throw std::invalid_argument("qp: A_in column mismatch");
  for (int i = 0; i < lower.size(); ++i)
    if (lower(i) > upper(i)) throw std::invalid_argument("qp: lower > upper");
  Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
    throw std::invalid_argument("qp: H not positive semidefinite");
}

namespace {

// modified Ruiz equilibration of [[H, A'], [A, 0]] plus a cost scaling
struct Scaling {
  Vec d;        // variable scaling, x = d .* x_hat
  Vec e;        // row scaling
  double c = 1.0;  // cost scaling
};

Scaling equilibrate(Mat& h, Vec& f, Mat& a, Vec& l, Vec& u) {
  const int n = static_cast<int>(h.rows());
  const int m = static_cast<int>(a.rows());
  Scaling s{Vec::Ones(n), Vec::Ones(m), 1.0};
  for (int pass = 0; pass < 10; ++pass) {
    for (int j = 0; j < n; ++j) {
      const double norm = std::max(h.col(j).cwiseAbs().maxCoeff(),
                                   m > 0 ? a.col(j).cwiseAbs().maxCoeff() : 0.0);
      const double dj = (norm > 1e-12) ? 1.0 / std::sqrt(norm) : 1.0;
      h.col(j) *= dj;
      h.row(j) *= dj;
      if (m > 0) a.col(j) *= dj;
      f(j) *= dj;
      s.d(j) *= dj;
    }
    for (int i = 0; i < m; ++i) {
      const double norm = a.row(i).cwiseAbs().maxCoeff();
      const double ei = (norm > 1e-12) ? 1.0 / std::sqrt(norm) : 1.0;
      a.row(i) *= ei;
      if (std::isfinite(l(i))) l(i) *= ei;
      if (std::isfinite(u(i))) u(i) *= ei;
      s.e(i) *= ei;
    }
    // cost scaling against the gradient magnitude
    double col_mean = 0.0;
    for (int j = 0; j < n; ++j) col_mean += h.col(j).cwiseAbs().maxCoeff();
    col_mean = std::max(col_mean / n, inf_norm(f));
    const double gamma = (col_mean > 1e-12) ? 1.0 / col_mean : 1.0;
    h *= gamma;
    f *= gamma;
    s.c *= gamma;
  }
  return s;
}

}  // namespace

QpSolution solve_qp(const QpProblem& p, const QpSettings& cfg, const QpWarmStart* warm) {
  const int n = p.n_vars();
  Stacked s = stack_rows(p, cfg.rho);
  const int m = static_cast<int>(s.a.rows());

  QpSolution out;
  if (m == 0) {
    // unconstrained: single regularized solve
    out.primal = (p.H + cfg.sigma * Mat::Identity(n, n)).ldlt().solve(-p.f);
    out.objective = 0.5 * out.primal.dot(p.H * out.primal) + p.f.dot(out.primal);
    out.status = QpStatus::Optimal;
    out.dual_eq = Vec::Zero(0);
    out.dual_in = Vec::Zero(0);
    return out;
  }

  // scaled copy for the iteration; residuals are checked unscaled
  Mat hs = p.H;
  Vec fs = p.f;
  Mat as = s.a;
  Vec ls = s.l, us = s.u;
  const Scaling sc = equilibrate(hs, fs, as, ls, us);

  Vec x = Vec::Zero(n), z = Vec::Zero(m), y = Vec::Zero(m);  // scaled iterates
  if (warm && warm->primal.size() == n) {
    x = warm->primal.cwiseQuotient(sc.d);
    z = as * x;
    z = z.cwiseMax(ls.cwiseMax(-1e30)).cwiseMin(us.cwiseMin(1e30));
  }
  if (warm && warm->dual.size() == m) y = sc.c * warm->dual.cwiseQuotient(sc.e);

  Vec rho = s.rho;
  auto factorize = [&](void) {
    Mat kkt = hs + cfg.sigma * Mat::Identity(n, n) + as.transpose() * rho.asDiagonal() * as;
    return Eigen::LLT<Mat>(kkt);
  };
  Eigen::LLT<Mat> llt = factorize();

  const double f_norm = inf_norm(p.f);
  int iter = 0;
  int since_rho_update = 0;
  for (; iter < cfg.max_iter; ++iter) {
    const Vec rhs = cfg.sigma * x - fs + as.transpose() * (rho.asDiagonal() * z - y);
    const Vec x_tilde = llt.solve(rhs);
    const Vec z_tilde = as * x_tilde;
    const Vec x_next = cfg.alpha * x_tilde + (1.0 - cfg.alpha) * x;
    const Vec zt = cfg.alpha * z_tilde + (1.0 - cfg.alpha) * z;
    const Vec z_next = (zt + y.cwiseQuotient(rho)).cwiseMax(ls).cwiseMin(us);
    const Vec y_next = y + rho.asDiagonal() * (zt - z_next);

    const Vec dx = x_next - x;
    const Vec dy = y_next - y;
    x = x_next;
    z = z_next;
    y = y_next;
    ++since_rho_update;

    if (iter % 5 != 0) continue;

    // unscaled residuals
    const Vec x_u = sc.d.cwiseProduct(x);
    const Vec y_u = sc.e.cwiseProduct(y) / sc.c;
    const Vec ax_u = s.a * x_u;
    const Vec z_u = z.cwiseQuotient(sc.e);
    const double r_prim = inf_norm(ax_u - z_u);
    const Vec hx_u = p.H * x_u;
    const Vec aty_u = s.a.transpose() * y_u;
    const double r_dual = inf_norm(hx_u + p.f + aty_u);
    const double eps_prim = cfg.tol_feas;
    const double eps_dual =
        cfg.tol_stat * std::max({1.0, inf_norm(hx_u), inf_norm(aty_u), f_norm});
    if (r_prim <= eps_prim && r_dual <= eps_dual) {
      out.status = QpStatus::Optimal;
      ++iter;
      break;
    }

    // primal infeasibility certificate (scaled quantities)
    const double dy_norm = inf_norm(dy);
    if (dy_norm > 1e-12) {
      double support = 0.0;
      bool unbounded = false;
      for (int i = 0; i < m; ++i) {
        if (dy(i) > 0.0) {
          if (!std::isfinite(us(i))) unbounded = true;
          else support += us(i) * dy(i);
        } else if (dy(i) < 0.0) {
          if (!std::isfinite(ls(i))) unbounded = true;
          else support += ls(i) * dy(i);
        }
      }
      if (!unbounded && inf_norm(as.transpose() * dy) <= 1e-10 * dy_norm &&
          support <= -1e-10 * dy_norm) {
        out.status = QpStatus::Infeasible;
        out.primal = sc.d.cwiseProduct(x);
        out.iterations = iter + 1;
        const Vec y_out = sc.e.cwiseProduct(y) / sc.c;
        out.dual_eq = y_out.head(s.n_eq);
        out.dual_in = y_out.tail(m - s.n_eq);
        return out;
      }
    }

    // dual infeasibility certificate (unbounded below)
    const double dx_norm = inf_norm(dx);
    if (dx_norm > 1e-12 && inf_norm(hs * dx) <= 1e-10 * dx_norm &&
        fs.dot(dx) <= -1e-10 * dx_norm) {
      const Vec adx = as * dx;
      bool cert = true;
      for (int i = 0; i < m && cert; ++i) {
        if (std::isfinite(us(i)) && adx(i) > 1e-10 * dx_norm) cert = false;
        if (std::isfinite(ls(i)) && adx(i) < -1e-10 * dx_norm) cert = false;
      }
      if (cert) {
        out.status = QpStatus::Infeasible;
        out.primal = sc.d.cwiseProduct(x);
        out.iterations = iter + 1;
        const Vec y_out = sc.e.cwiseProduct(y) / sc.c;
        out.dual_eq = y_out.head(s.n_eq);
        out.dual_in = y_out.tail(m - s.n_eq);
        return out;
      }
    }

    // residual balancing on the scaled iterates
    if (cfg.adaptive_rho && since_rho_update >= 50) {
      const Vec ax_s = as * x;
      const double rp_s = inf_norm(ax_s - z) /
                          std::max({1e-12, inf_norm(ax_s), inf_norm(z)});
      const double rd_s = inf_norm(hs * x + fs + as.transpose() * y) /
                          std::max({1e-12, inf_norm(hs * x), inf_norm(as.transpose() * y),
                                    inf_norm(fs)});
      const double ratio = std::sqrt(rp_s / std::max(1e-16, rd_s));
      if (ratio > 5.0 || ratio < 0.2) {
        rho *= std::clamp(ratio, 1e-3, 1e3);
        llt = factorize();
        since_rho_update = 0;
      }
    }
  }
  if (out.status != QpStatus::Optimal && iter >= cfg.max_iter) out.status = QpStatus::MaxIter;

  Vec x_u = sc.d.cwiseProduct(x);
  Vec y_u = sc.e.cwiseProduct(y) / sc.c;
  if (out.status == QpStatus::Optimal && cfg.polish) polish(p, s, cfg, x_u, y_u);

  out.primal = x_u;
  out.iterations = iter;
  out.objective = 0.5 * x_u.dot(p.H * x_u) + p.f.dot(x_u);
  out.dual_eq = y_u.head(s.n_eq);
  out.dual_in = y_u.tail(m - s.n_eq);
  const Vec ax = s.a * x_u;
  for (int i = s.n_eq; i < m; ++i) {
    const double tol = 1e-6 * (1.0 + std::max(std::abs(ax(i)), 1.0));
    if ((std::isfinite(s.l(i)) && ax(i) - s.l(i) < tol) ||
        (std::isfinite(s.u(i)) && s.u(i) - ax(i) < tol))
      out.active_set.push_back(i - s.n_eq);
  }
  return out;
}

KktResiduals kkt_residuals(const QpProblem& p, const Vec& x, const Vec& dual_eq,
                           const Vec& dual_in) {
  KktResiduals r;
  Vec grad = p.H * x + p.f;
  double grad_scale = std::max({1.0, inf_norm(p.H * x), inf_norm(p.f)});
  if (p.A_eq.rows() > 0) {
    r.primal_eq = inf_norm(p.A_eq * x - p.b_eq);
    grad += p.A_eq.transpose() * dual_eq;
    grad_scale = std::max(grad_scale, inf_norm(p.A_eq.transpose() * dual_eq));
  }
  if (p.A_in.rows() > 0) {
    const Vec ax = p.A_in * x;
    for (int i = 0; i < ax.size(); ++i) {
      if (std::isfinite(p.lower(i))) r.primal_in = std::max(r.primal_in, p.lower(i) - ax(i));
      if (std::isfinite(p.upper(i))) r.primal_in = std::max(r.primal_in, ax(i) - p.upper(i));
      if (dual_in(i) > 0.0 && std::isfinite(p.upper(i)))
        r.complementarity = std::max(r.complementarity, dual_in(i) * std::abs(p.upper(i) - ax(i)));
      if (dual_in(i) < 0.0 && std::isfinite(p.lower(i)))
        r.complementarity = std::max(r.complementarity, -dual_in(i) * std::abs(ax(i) - p.lower(i)));
    }
    grad += p.A_in.transpose() * dual_in;
    grad_scale = std::max(grad_scale, inf_norm(p.A_in.transpose() * dual_in));
  }
  r.stationarity = inf_norm(grad) / grad_scale;  // scaled like the solver's test
  return r;
}

}  // namespace softarm
