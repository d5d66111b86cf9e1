#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

#include "softarm/errors.hpp"

namespace softarm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

/**
 * Physical description of the arm: pneumatic segments, each split into one
 * or more constant-curvature sections, with a rigid connector after every
 * segment (the last connector carries the end-effector mount).
 *
 * The rest arm axis is +z in the base frame; gravity is expressed in the
 * base frame and defaults to (0,0,-9.81). Pressures are kPa-equivalent
 * throughout.
 */
struct ArmGeometry {
  int n_segments = 2;
  int pcc_per_segment = 1;
  std::vector<double> segment_rest_length{0.125, 0.125};   // l_0, per segment [m]
  std::vector<Eigen::Vector3d> connector_offset{{0, 0, 0.02}, {0, 0, 0.02}};
  std::vector<std::array<double, 3>> chamber_angles{
      {0.0, 2.0 * M_PI / 3.0, 4.0 * M_PI / 3.0},
      {0.0, 2.0 * M_PI / 3.0, 4.0 * M_PI / 3.0}};  // [rad] about the arm axis
  std::vector<double> segment_mass{0.10, 0.10};            // [kg]
  std::vector<double> connector_mass{0.02, 0.02};          // [kg]
  Eigen::Vector3d gravity{0.0, 0.0, -9.81};
  RigidTransform base_frame;
  double theta_max = M_PI;   // per-section workspace guard [rad]
  double fk_scale = 1.0;     // constant segment-length factor for the online FK
  double fd_step = 1e-5;     // finite-difference step for fk_jacobian [rad]

  int n_sections() const { return n_segments * pcc_per_segment; }
  int q_size() const { return 2 * n_sections(); }
  int n_inputs() const { return 2 * n_segments; }
  double section_rest_length(int section) const {
    return segment_rest_length[section / pcc_per_segment] / pcc_per_segment;
  }

  void validate() const;  // throws InvalidGeometry
};

struct ThetaPhi {
  double theta = 0.0;
  double phi = 0.0;
  bool phi_by_convention = false;  // true when theta == 0 and phi is arbitrary
};

/// (theta, phi) -> (theta_x, theta_y); total and singularity-free at rest.
Eigen::Vector2d theta_phi_to_xy(double theta, double phi);

/// Inverse map; phi = 0 by convention (flagged) for the straight section.
ThetaPhi xy_to_theta_phi(double theta_x, double theta_y);

/// Straight-line distance between a bent section's endpoints,
/// 2*l0*sin(theta/2)/theta, with a series fallback near theta = 0.
double chord_length(double theta, double l0);

/// d(chord_length)/d(theta), series-switched near zero.
double chord_length_dtheta(double theta, double l0);

/// chord_length_dtheta(theta)/theta, finite at theta = 0 (used for the
/// per-component derivatives d h/d theta_x = ratio * theta_x).
double chord_dtheta_over_theta(double theta, double l0);

/// Workspace guard: every section's bending magnitude within theta_max.
bool within_workspace(const Vec& q, const ArmGeometry& geom);

struct EePose {
  Eigen::Vector3d position;  // end-effector, equals marker_tip
  Eigen::Vector3d marker_base;
  Eigen::Vector3d marker_mid;  // after the first segment's connector
  Eigen::Vector3d marker_tip;
};

/**
 * Chain-of-rotations forward kinematics: per section the half rotation
 * RotY(-theta_x/2)*RotX(-theta_y/2) is applied before the segment vector and
 * once more before the following vector. With `shrink` the segment vector
 * magnitude is the exact chord; without it, fk_scale * rest length.
 */
EePose forward_kinematics(const Vec& q, const ArmGeometry& geom, bool shrink);

/// Central-difference position Jacobian (3 x q_size) of forward_kinematics.
Mat fk_jacobian(const Vec& q, const ArmGeometry& geom, bool shrink = false);

/// Points checked against obstacles: base, each section chord midpoint and
/// each connector end (shrink FK). Base is index 0.
std::vector<Eigen::Vector3d> collision_probes(const Vec& q, const ArmGeometry& geom);

/**
 * Reconstruct the three non-negative chamber pressures per segment from the
 * two signed pseudo-pressures. A common-mode shift keeps every chamber
 * non-negative without changing the net bending moment.
 */
Vec pseudo_to_chamber(const Vec& pseudo, const ArmGeometry& geom);

/// Moment projection back to pseudo-pressures; annihilates the common mode.
Vec chamber_to_pseudo(const Vec& chamber, const ArmGeometry& geom);

}  // namespace softarm
