#pragma once

#include <vector>

#include "softarm/arm_model.hpp"

namespace softarm {

struct DynamicsParams {
  double stiffness = 0.5;                        // N*m/rad, diagonal K
  double damping = 0.05;                         // N*m*s/rad, diagonal D
  std::vector<double> alloc_gain{0.015, 0.015};  // N*m per pressure unit, per segment
  double cond_limit = 1e8;                       // inertia conditioning guard

  void validate(const ArmGeometry& geom) const;
};

struct DynamicsTerms {
  Mat inertia;   // B(q), symmetric positive definite
  Vec coriolis;  // c(q, qd), bias vector (vanishes at qd = 0)
  Vec gravity;   // g(q)
  Mat stiffness_matrix;
  Mat damping_matrix;
  Mat alloc;  // q_size x n_inputs
};

struct JointSpaceTerms {
  Mat inertia;   // B_xi
  Vec coriolis;  // c_xi
  Vec gravity;   // g_xi
};

/**
 * Equivalent rigid chain for the soft arm: per constant-curvature section the
 * five joints RotY(-tx/2), RotX(-ty/2), prismatic(+z, chord), RotY(-tx/2),
 * RotX(-ty/2). Section mass rides the prismatic link as a transverse rod
 * (centered at the rest-length midpoint); connectors are point masses at
 * their midpoints. Chain FK at m(q) reproduces the curvature FK exactly.
 */
class AugmentedChain {
 public:
  explicit AugmentedChain(const ArmGeometry& geom);

  int n_joints() const { return static_cast<int>(joints_.size()); }
  const ArmGeometry& geometry() const { return geom_; }

  /// m(q): half-angles for the revolute joints, chord for the prismatic.
  Vec map_to_augmented(const Vec& q) const;

  /// J_m = d m / d q, (5*n_sections) x q_size.
  Mat mapping_jacobian(const Vec& q) const;

  /// d J_m / d t along qd (only the prismatic rows are state dependent).
  Mat mapping_jacobian_dot(const Vec& q, const Vec& qd) const;

  Eigen::Vector3d tip_position(const Vec& xi) const;

  /// Composite-rigid-body inertia matrix B_xi.
  Mat inertia_matrix(const Vec& xi) const;

  /// Recursive Newton-Euler: generalized forces for the given joint motion.
  Vec inverse_dynamics(const Vec& xi, const Vec& xi_dot, const Vec& xi_ddot,
                       bool with_gravity) const;

  double gravity_potential(const Vec& xi) const;

 private:
  enum class JointType { RevoluteY, RevoluteX, PrismaticZ };
  struct Joint {
    JointType type;
    RigidTransform pre;  // parent child-frame -> this joint frame
    double mass = 0.0;
    Eigen::Vector3d com = Eigen::Vector3d::Zero();      // child frame
    Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();  // about com, child frame
  };
  struct FrameState;

  void forward_pass(const Vec& xi, const Vec& xi_dot, const Vec& xi_ddot,
                    std::vector<FrameState>& frames) const;

  ArmGeometry geom_;
  std::vector<Joint> joints_;
  Eigen::Vector3d tool_offset_;  // last connector, in the final child frame
};

JointSpaceTerms joint_space_terms(const Vec& xi, const Vec& xi_dot, const AugmentedChain& chain);

DynamicsTerms dynamics_terms(const Vec& q, const Vec& qd, const AugmentedChain& chain,
                             const DynamicsParams& params);
DynamicsTerms dynamics_terms(const Vec& q, const Vec& qd, const ArmGeometry& geom,
                             const DynamicsParams& params);

/// q_dd = B^-1 (A p - c - g - K q - D qd); the task-space wrench of the full
/// model is held at zero.
Vec plant_accel(const Vec& q, const Vec& qd, const Vec& pseudo, const DynamicsTerms& terms);

/// Total mechanical energy of the soft-arm model (kinetic + elastic + gravity).
double mechanical_energy(const Vec& q, const Vec& qd, const AugmentedChain& chain,
                         const DynamicsParams& params);

}  // namespace softarm
