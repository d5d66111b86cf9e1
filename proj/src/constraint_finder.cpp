#include "softarm/constraint_finder.hpp"

#include <cmath>

#include "softarm/rng.hpp"

namespace softarm {

void FinderConfig::validate() const {
  if (n_trials < 1) throw ConfigError("finder: n_trials must be >= 1");
  if (n_samples < 1) throw ConfigError("finder: n_samples must be >= 1");
  if (!(reach_fraction > 0.0 && reach_fraction <= 1.0))
    throw ConfigError("finder: reach_fraction must be in (0, 1]");
  if (!(target_radius > 0.0)) throw ConfigError("finder: target_radius must be > 0");
  for (const auto& ob : obstacles)
    if (!(ob.radius > 0.0)) throw ConfigError("finder: obstacle radii must be > 0");
}

bool check_inclusion(const Vec& q_l, const Vec& q_u, const FinderConfig& cfg,
                     const ArmGeometry& geom, std::uint64_t seed) {
  const int nq = geom.q_size();
  if (q_l.size() != nq || q_u.size() != nq)
    throw ConfigError("check_inclusion: box dimension mismatch");
  for (int i = 0; i < nq; ++i)
    if (q_l(i) > q_u(i)) throw ConfigError("check_inclusion: q_l above q_u");

  Rng rng(seed);
  std::vector<bool> reached(cfg.targets.size(), false);
  Vec q(nq);
  for (int s = 0; s < cfg.n_samples; ++s) {
    for (int i = 0; i < nq; ++i) q(i) = rng.uniform(q_l(i), q_u(i));
    const auto probes = collision_probes(q, geom);
    for (std::size_t p = 1; p < probes.size(); ++p) {  // base excluded
      for (const auto& ob : cfg.obstacles) {
        if ((probes[p] - ob.center).norm() <= ob.radius) return false;
      }
    }
    const Eigen::Vector3d& tip = probes.back();
    for (std::size_t t = 0; t < cfg.targets.size(); ++t) {
      if (!reached[t] && (tip - cfg.targets[t]).norm() <= cfg.target_radius) reached[t] = true;
    }
  }
  if (cfg.targets.empty()) return true;
  int n_reached = 0;
  for (bool r : reached) n_reached += r ? 1 : 0;
  return static_cast<double>(n_reached) >=
         cfg.reach_fraction * static_cast<double>(cfg.targets.size());
}

FinderResult find_constraint_set(const FinderConfig& cfg, const ArmGeometry& geom) {
  cfg.validate();
  const int nq = geom.q_size();
  const Vec std_l = Vec::Constant(nq, -M_PI / 2.0);
  const Vec std_u = Vec::Constant(nq, M_PI / 2.0);

  FinderResult out;
  if (check_inclusion(std_l, std_u, cfg, geom, Rng::derive_seed(cfg.seed, 0))) {
    out.box = {std_l, std_u};
    out.standard = true;
    return out;
  }

  Vec best_l = Vec::Zero(nq), best_u = Vec::Zero(nq);
  double best_norm = 0.0;
  for (int t = 0; t < cfg.n_trials; ++t) {
    Rng rng(Rng::derive_seed(cfg.seed, 1 + t));
    Vec trial_l(nq), trial_u(nq);
    for (int i = 0; i < nq; ++i) trial_l(i) = rng.uniform(std_l(i), std_u(i));
    for (int i = 0; i < nq; ++i) trial_u(i) = rng.uniform(trial_l(i), std_u(i));
    const double norm = (trial_u - trial_l).norm();
    if (norm > best_norm &&
        check_inclusion(trial_l, trial_u, cfg, geom, rng.next_u64())) {
      best_l = trial_l;
      best_u = trial_u;
      best_norm = norm;
      out.accepted.push_back({t, ConstraintBox{trial_l, trial_u}});
    }
  }
  if (best_norm == 0.0)
    throw NoFeasibleBox("find_constraint_set: no trial box passed the inclusion check");
  out.box = {best_l, best_u};
  return out;
}

std::pair<Mat, Vec> box_to_polytope(const ConstraintBox& box) {
  const int nq = static_cast<int>(box.q_l.size());
  Mat a(2 * nq, nq);
  a.topRows(nq).setIdentity();
  a.bottomRows(nq) = -Mat::Identity(nq, nq);
  Vec b(2 * nq);
  b.head(nq) = box.q_u;
  b.tail(nq) = -box.q_l;
  return {a, b};
}

}  // namespace softarm
