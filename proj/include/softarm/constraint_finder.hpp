#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "softarm/arm_model.hpp"
#include "softarm/mpc.hpp"

namespace softarm {

struct FinderConfig {
  int n_trials = 200;
  int n_samples = 400;  // curvature draws per inclusion check
  std::vector<Eigen::Vector3d> targets;
  double target_radius = 0.02;  // end-effector neighborhood counted as reached
  double reach_fraction = 0.9;  // fraction of targets that must be reachable
  std::vector<Obstacle> obstacles;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ConstraintBox {
  Vec q_l, q_u;
};

struct FinderResult {
  ConstraintBox box;
  bool standard = false;  // the untouched standard limits passed directly
  std::vector<std::pair<int, ConstraintBox>> accepted;  // improvement history
};

/**
 * Samples curvatures uniformly in [q_l, q_u] (seeded) and reports whether no
 * arm probe point ever enters an obstacle while enough targets are reached
 * within the configured neighborhood.
 */
bool check_inclusion(const Vec& q_l, const Vec& q_u, const FinderConfig& cfg,
                     const ArmGeometry& geom, std::uint64_t seed);

/**
 * Randomized search for the largest (2-norm of side lengths) curvature box
 * that passes check_inclusion, starting from the standard +-pi/2 limits.
 * Throws NoFeasibleBox when no trial is accepted.
 */
FinderResult find_constraint_set(const FinderConfig& cfg, const ArmGeometry& geom);

/// Axis-aligned box as stacked rows: A_I = (I; -I), b_I = (q_u; -q_l).
std::pair<Mat, Vec> box_to_polytope(const ConstraintBox& box);

}  // namespace softarm
