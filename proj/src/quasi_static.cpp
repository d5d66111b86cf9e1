#include "softarm/quasi_static.hpp"

namespace softarm {

Vec quasi_static_step(const Vec& q_meas, const Eigen::Vector3d& target,
                      const QuasiStaticConfig& cfg, const ArmGeometry& geom,
                      const DynamicsParams& params, const AugmentedChain& chain) {
  const Mat jac = fk_jacobian(q_meas, geom, false);
  const Eigen::Vector3d err = target - forward_kinematics(q_meas, geom, false).position;

  // damped least-squares inverse-kinematics increment
  const Eigen::Matrix3d jjt = jac * jac.transpose() +
                              cfg.damping_lambda * cfg.damping_lambda * Eigen::Matrix3d::Identity();
  const Vec dq = cfg.gain * jac.transpose() * jjt.ldlt().solve(err);

  // static balance A p = K (q + dq) + g(q), solved in least squares
  const Vec xi = chain.map_to_augmented(q_meas);
  const Mat jm = chain.mapping_jacobian(q_meas);
  const Vec g = jm.transpose() *
                chain.inverse_dynamics(xi, Vec::Zero(xi.size()), Vec::Zero(xi.size()), true);
  Mat alloc = Mat::Zero(geom.q_size(), geom.n_inputs());
  for (int s = 0; s < geom.n_sections(); ++s) {
    const int seg = s / geom.pcc_per_segment;
    alloc.block<2, 2>(2 * s, 2 * seg) = params.alloc_gain[seg] * Eigen::Matrix2d::Identity();
  }
  const Vec rhs = params.stiffness * (q_meas + dq) + g;
  Vec p = alloc.colPivHouseholderQr().solve(rhs);
  if (cfg.p_min.size() == p.size()) p = p.cwiseMax(cfg.p_min).cwiseMin(cfg.p_max);
  return p;
}

}  // namespace softarm
