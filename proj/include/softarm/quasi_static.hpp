#pragma once

#include "softarm/rigid_dynamics.hpp"

namespace softarm {

struct QuasiStaticConfig {
  double gain = 0.5;            // step size on the inverse-kinematics update
  double damping_lambda = 1e-3; // damped pseudo-inverse regularization
  Vec p_min, p_max;             // pressure clipping
};

/**
 * Inverse-kinematics baseline: a damped pseudo-inverse step toward the
 * target and a static stiffness/gravity balance for the commanded pressure.
 * No dynamic information, no lookahead.
 */
Vec quasi_static_step(const Vec& q_meas, const Eigen::Vector3d& target,
                      const QuasiStaticConfig& cfg, const ArmGeometry& geom,
                      const DynamicsParams& params, const AugmentedChain& chain);

class QuasiStaticController {
 public:
  QuasiStaticController(const ArmGeometry& geom, const DynamicsParams& params,
                        const QuasiStaticConfig& cfg)
      : geom_(geom), params_(params), cfg_(cfg), chain_(geom) {
    if (!(cfg.gain > 0.0)) throw ConfigError("quasi_static: gain must be > 0");
    if (!(cfg.damping_lambda >= 0.0)) throw ConfigError("quasi_static: lambda must be >= 0");
  }

  Vec step(const Vec& q_meas, const Eigen::Vector3d& target) const {
    return quasi_static_step(q_meas, target, cfg_, geom_, params_, chain_);
  }

 private:
  ArmGeometry geom_;
  DynamicsParams params_;
  QuasiStaticConfig cfg_;
  AugmentedChain chain_;
};

}  // namespace softarm
