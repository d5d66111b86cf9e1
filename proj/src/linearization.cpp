#include "softarm/linearization.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace softarm {

ContinuousSS continuous_ss(const DynamicsTerms& terms) {
  const int nq = terms.inertia.rows();
  const int nu = terms.alloc.cols();
  Eigen::LLT<Mat> llt(terms.inertia);
  if (llt.info() != Eigen::Success) throw SingularInertia("continuous_ss: inertia not SPD");

  ContinuousSS ss;
  ss.A = Mat::Zero(2 * nq, 2 * nq);
  ss.A.topRightCorner(nq, nq).setIdentity();
  ss.A.bottomLeftCorner(nq, nq) = -llt.solve(terms.stiffness_matrix);
  ss.A.bottomRightCorner(nq, nq) = -llt.solve(terms.damping_matrix);
  ss.B = Mat::Zero(2 * nq, nu);
  ss.B.bottomRows(nq) = llt.solve(terms.alloc);
  ss.W = Vec::Zero(2 * nq);
  ss.W.tail(nq) = -llt.solve(terms.coriolis + terms.gravity);
  return ss;
}

Mat matrix_exponential(const Mat& m, double t) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix_exponential: square matrix required");
  const Mat mt = m * t;
  if (!mt.allFinite()) throw NonFiniteInput("matrix_exponential: non-finite input");
  return mt.exp();
}

DiscreteDynamics discretize(const ContinuousSS& ss, double ts, bool exact_drift) {
  if (!(ts > 0.0)) throw std::invalid_argument("discretize: Ts must be > 0");
  const int n = ss.A.rows();
  const int m = ss.B.cols();

  // exp([[A, B, W], [0, 0, 0]] Ts): the top-right columns carry the exact
  // input and drift integrals, regardless of A's invertibility
  Mat aug = Mat::Zero(n + m + 1, n + m + 1);
  aug.topLeftCorner(n, n) = ss.A;
  aug.block(0, n, n, m) = ss.B;
  aug.block(0, n + m, n, 1) = ss.W;
  const Mat e = matrix_exponential(aug, ts);

  DiscreteDynamics dyn;
  dyn.A_d = e.topLeftCorner(n, n);
  dyn.B_d = e.block(0, n, n, m);
  dyn.W_d = exact_drift ? Vec(e.block(0, n + m, n, 1)) : Vec(ss.W * ts);
  dyn.Ts = ts;
  return dyn;
}

}  // namespace softarm
