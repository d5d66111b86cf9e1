#include "softarm/dare.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace softarm {

DareResult solve_dare(const Mat& a, const Mat& b, const Mat& q, const Mat& r, double tol,
                      int max_iter) {
  const int n = static_cast<int>(a.rows());
  DareResult out;

  Eigen::LLT<Mat> r_llt(r);
  if (r_llt.info() != Eigen::Success) return out;  // R must be positive definite

  Mat a_k = a;
  Mat g_k = b * r_llt.solve(b.transpose());
  Mat h_k1 = q;
  Mat h_k;
  int it = 0;
  for (; it < max_iter; ++it) {
    h_k = h_k1;
    const Mat w = Mat::Identity(n, n) + g_k * h_k;
    Eigen::PartialPivLU<Mat> w_lu(w);
    const Mat v1 = w_lu.solve(a_k);
    const Mat v2 = w_lu.solve(g_k.transpose()).transpose();
    g_k += a_k * v2 * a_k.transpose();
    h_k1 = h_k + v1.transpose() * h_k * a_k;
    a_k *= v1;
    if (!h_k1.allFinite()) return out;
    if ((h_k1 - h_k).norm() <= 1e-13 * std::max(1.0, h_k1.norm())) {
      ++it;
      break;
    }
  }
  out.iterations = it;
  out.P = 0.5 * (h_k1 + h_k1.transpose());

  const Mat btp = b.transpose() * out.P;
  const Mat gain_lhs = r + btp * b;
  out.K = -gain_lhs.ldlt().solve(btp * a);

  const Mat rhs = a.transpose() * out.P * a -
                  a.transpose() * out.P * b * gain_lhs.ldlt().solve(btp * a) + q;
  out.residual = (rhs - out.P).norm();

  Eigen::EigenSolver<Mat> es(a + b * out.K);
  out.spectral_radius = es.eigenvalues().cwiseAbs().maxCoeff();
  out.converged = out.residual <= tol && out.spectral_radius < 1.0 && out.P.allFinite();
  return out;
}

}  // namespace softarm
