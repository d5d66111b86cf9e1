#pragma once

#include "softarm/rigid_dynamics.hpp"

namespace softarm {

/// x = (q, qd); xd = A x + B u + W with the bias frozen at the
/// linearization state.
struct ContinuousSS {
  Mat A;  // 2q x 2q, top blocks (0 | I)
  Mat B;  // 2q x n_inputs, top block zero
  Vec W;  // 2q, top block zero
};

struct DiscreteDynamics {
  Mat A_d;
  Mat B_d;
  Vec W_d;
  double Ts = 0.0;
};

ContinuousSS continuous_ss(const DynamicsTerms& terms);

/// Scaling-and-squaring Pade approximant of exp(M t).
Mat matrix_exponential(const Mat& m, double t);

/**
 * Exact zero-order-hold discretization of (A, B) through the augmented block
 * exponential, which stays well defined when A is singular. The drift is
 * W*Ts by default (first-order hold); `exact_drift` switches to the exact
 * integral of exp(A tau) W.
 */
DiscreteDynamics discretize(const ContinuousSS& ss, double ts, bool exact_drift = false);

}  // namespace softarm
