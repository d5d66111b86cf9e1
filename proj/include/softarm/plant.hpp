#pragma once

#include <cstdint>
#include <utility>

#include "softarm/rigid_dynamics.hpp"
#include "softarm/rng.hpp"

namespace softarm {

struct PlantOptions {
  int substeps = 20;                // RK4 substeps per control period
  double actuation_tau = 0.0;       // first-order pressure lag [s], 0 disables
  double noise_q_std = 0.0;         // measurement noise [rad]
  double noise_qd_std = 0.0;        // [rad/s]
  double param_perturbation = 0.0;  // relative mass/stiffness perturbation
  double chamber_max = 120.0;       // audit bound for logged chamber pressures

  void validate() const;
};

/**
 * Ground-truth simulator: RK4 on the full nonlinear dynamics, optional
 * actuation lag and observation noise. Masses and stiffness are perturbed
 * once at construction (seeded); the state itself evolves noiselessly.
 */
class Plant {
 public:
  Plant(const ArmGeometry& geom, const DynamicsParams& params, const PlantOptions& opts,
        std::uint64_t seed);

  /// Advance by dt under commanded chamber pressures. Throws
  /// SimulationDiverged when the state blows up.
  void step(const Vec& chamber_cmd, double dt);

  /// Noisy measurement (q, qd); the underlying state is untouched.
  std::pair<Vec, Vec> observe();

  const Vec& q() const { return q_; }
  const Vec& qd() const { return qd_; }
  const Vec& effective_chamber() const { return chamber_eff_; }
  Eigen::Vector3d tip() const;

  const ArmGeometry& geometry() const { return geom_; }
  const DynamicsParams& true_params() const { return params_; }

  void set_state(const Vec& q, const Vec& qd);

 private:
  struct PerturbedModel {
    ArmGeometry geom;
    DynamicsParams params;
  };
  Plant(PerturbedModel model, const PlantOptions& opts, std::uint64_t seed);

  ArmGeometry geom_;
  DynamicsParams params_;  // perturbed copy when requested
  PlantOptions opts_;
  AugmentedChain chain_;
  Rng rng_;
  Vec q_, qd_, chamber_eff_;
};

}  // namespace softarm
