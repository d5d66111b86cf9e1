#include "softarm/plant.hpp"

#include <cmath>

namespace softarm {

void PlantOptions::validate() const {
  if (substeps < 1) throw ConfigError("plant: substeps must be >= 1");
  if (actuation_tau < 0.0) throw ConfigError("plant: actuation_tau must be >= 0");
  if (noise_q_std < 0.0 || noise_qd_std < 0.0) throw ConfigError("plant: noise std must be >= 0");
  if (param_perturbation < 0.0 || param_perturbation >= 1.0)
    throw ConfigError("plant: param_perturbation must be in [0, 1)");
  if (!(chamber_max > 0.0)) throw ConfigError("plant: chamber_max must be > 0");
}

Plant::Plant(const ArmGeometry& geom, const DynamicsParams& params, const PlantOptions& opts,
             std::uint64_t seed)
    : Plant(
          [&] {
            opts.validate();
            PerturbedModel m{geom, params};
            // deterministic draw order: segment masses, connector masses, stiffness
            if (opts.param_perturbation > 0.0) {
              Rng rng(Rng::derive_seed(seed, 17));
              const double rel = opts.param_perturbation;
              for (auto& v : m.geom.segment_mass) v *= 1.0 + rng.uniform(-rel, rel);
              for (auto& v : m.geom.connector_mass) v *= 1.0 + rng.uniform(-rel, rel);
              m.params.stiffness *= 1.0 + rng.uniform(-rel, rel);
            }
            return m;
          }(),
          opts, seed) {}

Plant::Plant(PerturbedModel model, const PlantOptions& opts, std::uint64_t seed)
    : geom_(std::move(model.geom)),
      params_(std::move(model.params)),
      opts_(opts),
      chain_(geom_),
      rng_(Rng::derive_seed(seed, 29)),
      q_(Vec::Zero(geom_.q_size())),
      qd_(Vec::Zero(geom_.q_size())),
      chamber_eff_(Vec::Zero(3 * geom_.n_segments)) {}

void Plant::set_state(const Vec& q, const Vec& qd) {
  q_ = q;
  qd_ = qd;
}

void Plant::step(const Vec& chamber_cmd, double dt) {
  const double h = dt / opts_.substeps;
  for (int s = 0; s < opts_.substeps; ++s) {
    if (opts_.actuation_tau > 0.0) {
      const double decay = std::exp(-h / opts_.actuation_tau);
      chamber_eff_ = chamber_cmd + decay * (chamber_eff_ - chamber_cmd);
    } else {
      chamber_eff_ = chamber_cmd;
    }
    const Vec pseudo = chamber_to_pseudo(chamber_eff_, geom_);

    auto accel = [&](const Vec& q, const Vec& qd) {
      return plant_accel(q, qd, pseudo, dynamics_terms(q, qd, chain_, params_));
    };
    const Vec k1q = qd_, k1v = accel(q_, qd_);
    const Vec k2q = qd_ + 0.5 * h * k1v, k2v = accel(q_ + 0.5 * h * k1q, qd_ + 0.5 * h * k1v);
    const Vec k3q = qd_ + 0.5 * h * k2v, k3v = accel(q_ + 0.5 * h * k2q, qd_ + 0.5 * h * k2v);
    const Vec k4q = qd_ + h * k3v, k4v = accel(q_ + h * k3q, qd_ + h * k3v);
    q_ += (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    qd_ += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);

    if (!q_.allFinite() || !qd_.allFinite() || q_.cwiseAbs().maxCoeff() > 50.0)
      throw SimulationDiverged("plant: state blew up");
  }
}

std::pair<Vec, Vec> Plant::observe() {
  Vec qm = q_, qdm = qd_;
  if (opts_.noise_q_std > 0.0)
    for (int i = 0; i < qm.size(); ++i) qm(i) += rng_.gaussian(0.0, opts_.noise_q_std);
  if (opts_.noise_qd_std > 0.0)
    for (int i = 0; i < qdm.size(); ++i) qdm(i) += rng_.gaussian(0.0, opts_.noise_qd_std);
  return {qm, qdm};
}

Eigen::Vector3d Plant::tip() const { return forward_kinematics(q_, geom_, true).position; }

}  // namespace softarm
