#pragma once

#include "softarm/arm_model.hpp"

namespace softarm {

struct DareResult {
  Mat P;  // fixed-point solution
  Mat K;  // gain, u = K x stabilizes A + B K
  bool converged = false;
  double residual = 0.0;
  double spectral_radius = 0.0;
  int iterations = 0;
};

/**
 * Discrete-time algebraic Riccati equation via the structure-preserving
 * doubling iteration. `converged` requires the fixed-point residual below
 * `tol` and a stable closed loop; callers fall back to K = 0 otherwise.
 */
DareResult solve_dare(const Mat& a, const Mat& b, const Mat& q, const Mat& r, double tol = 1e-9,
                      int max_iter = 120);

}  // namespace softarm
