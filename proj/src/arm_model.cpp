#include "softarm/arm_model.hpp"

#include <cmath>

namespace softarm {

namespace {

constexpr double kChordEps = 1e-6;       // switch point for the chord itself
constexpr double kChordDerivEps = 1e-2;  // wider: the closed form cancels near 0

Eigen::Matrix3d rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

Eigen::Matrix3d rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

Eigen::Matrix3d half_rotation(double theta_x, double theta_y) {
  return rot_y(-0.5 * theta_x) * rot_x(-0.5 * theta_y);
}

}  // namespace

void ArmGeometry::validate() const {
  if (n_segments < 1 || pcc_per_segment < 1)
    throw InvalidGeometry("segment/section counts must be >= 1");
  auto check_size = [&](std::size_t got, const char* what) {
    if (got != static_cast<std::size_t>(n_segments))
      throw InvalidGeometry(std::string(what) + ": expected one entry per segment");
  };
  check_size(segment_rest_length.size(), "segment_rest_length");
  check_size(connector_offset.size(), "connector_offset");
  check_size(chamber_angles.size(), "chamber_angles");
  check_size(segment_mass.size(), "segment_mass");
  check_size(connector_mass.size(), "connector_mass");
  for (double l : segment_rest_length)
    if (!(l > 0.0)) throw InvalidGeometry("segment_rest_length must be > 0");
  for (const auto& angles : chamber_angles) {
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        const double d = std::remainder(angles[i] - angles[j], 2.0 * M_PI);
        if (std::abs(d) < 1e-9)
          throw InvalidGeometry("chamber angles must be pairwise distinct mod 2pi");
      }
  }
  for (double m : segment_mass)
    if (!(m >= 0.0)) throw InvalidGeometry("segment_mass must be >= 0");
  for (double m : connector_mass)
    if (!(m >= 0.0)) throw InvalidGeometry("connector_mass must be >= 0");
  if (!gravity.allFinite()) throw InvalidGeometry("gravity must be finite");
  if (!(theta_max > 0.0)) throw InvalidGeometry("theta_max must be > 0");
  if (!(fk_scale > 0.0)) throw InvalidGeometry("fk_scale must be > 0");
  if (!(fd_step > 0.0)) throw InvalidGeometry("fd_step must be > 0");
}

Eigen::Vector2d theta_phi_to_xy(double theta, double phi) {
  return {theta * std::cos(phi), theta * std::sin(phi)};
}

ThetaPhi xy_to_theta_phi(double theta_x, double theta_y) {
  ThetaPhi out;
  out.theta = std::hypot(theta_x, theta_y);
  if (out.theta > 0.0) {
    out.phi = std::atan2(theta_y, theta_x);
  } else {
    out.phi = 0.0;
    out.phi_by_convention = true;
  }
  return out;
}

double chord_length(double theta, double l0) {
  const double a = std::abs(theta);
  if (a <= kChordEps) return l0 * (1.0 - theta * theta / 24.0);
  return 2.0 * l0 * std::sin(0.5 * theta) / theta;
}

double chord_length_dtheta(double theta, double l0) {
  if (std::abs(theta) <= kChordDerivEps)
    return l0 * theta * (-1.0 / 12.0 + theta * theta / 480.0);
  return l0 * std::cos(0.5 * theta) / theta - 2.0 * l0 * std::sin(0.5 * theta) / (theta * theta);
}

double chord_dtheta_over_theta(double theta, double l0) {
  if (std::abs(theta) <= kChordDerivEps) return l0 * (-1.0 / 12.0 + theta * theta / 480.0);
  return chord_length_dtheta(theta, l0) / theta;
}

bool within_workspace(const Vec& q, const ArmGeometry& geom) {
  for (int s = 0; s < geom.n_sections(); ++s)
    if (std::hypot(q(2 * s), q(2 * s + 1)) > geom.theta_max) return false;
  return true;
}

namespace {

struct FkWalk {
  EePose pose;
  std::vector<Eigen::Vector3d> probes;
};

FkWalk fk_walk(const Vec& q, const ArmGeometry& geom, bool shrink, bool want_probes) {
  if (!q.allFinite()) throw NonFiniteInput("forward_kinematics: non-finite curvature");
  if (q.size() != geom.q_size()) throw InvalidGeometry("forward_kinematics: curvature size mismatch");

  FkWalk out;
  Eigen::Matrix3d rot = geom.base_frame.rotation;
  Eigen::Vector3d pos = geom.base_frame.translation;
  out.pose.marker_base = pos;
  if (want_probes) out.probes.push_back(pos);

  int section = 0;
  for (int seg = 0; seg < geom.n_segments; ++seg) {
    for (int s = 0; s < geom.pcc_per_segment; ++s, ++section) {
      const double tx = q(2 * section);
      const double ty = q(2 * section + 1);
      const double theta = std::hypot(tx, ty);
      const double l0 = geom.section_rest_length(section);
      const double h = shrink ? chord_length(theta, l0) : geom.fk_scale * l0;
      const Eigen::Matrix3d half = half_rotation(tx, ty);
      rot = rot * half;
      if (want_probes) out.probes.push_back(pos + rot * Eigen::Vector3d(0, 0, 0.5 * h));
      pos += rot * Eigen::Vector3d(0, 0, h);
      rot = rot * half;
    }
    pos += rot * geom.connector_offset[seg];
    if (want_probes) out.probes.push_back(pos);
    if (seg == 0) out.pose.marker_mid = pos;
  }
  out.pose.position = pos;
  out.pose.marker_tip = pos;
  if (geom.n_segments == 1) out.pose.marker_mid = pos;
  return out;
}

}  // namespace

EePose forward_kinematics(const Vec& q, const ArmGeometry& geom, bool shrink) {
  return fk_walk(q, geom, shrink, false).pose;
}

Mat fk_jacobian(const Vec& q, const ArmGeometry& geom, bool shrink) {
  if (!q.allFinite()) throw NonFiniteInput("fk_jacobian: non-finite curvature");
  const double h = geom.fd_step;
  Mat jac(3, q.size());
  Vec qp = q, qm = q;
  for (int i = 0; i < q.size(); ++i) {
    qp(i) = q(i) + h;
    qm(i) = q(i) - h;
    jac.col(i) = (forward_kinematics(qp, geom, shrink).position -
                  forward_kinematics(qm, geom, shrink).position) /
                 (2.0 * h);
    qp(i) = q(i);
    qm(i) = q(i);
  }
  return jac;
}

std::vector<Eigen::Vector3d> collision_probes(const Vec& q, const ArmGeometry& geom) {
  return fk_walk(q, geom, true, true).probes;
}

Vec pseudo_to_chamber(const Vec& pseudo, const ArmGeometry& geom) {
  if (pseudo.size() != geom.n_inputs())
    throw InvalidGeometry("pseudo_to_chamber: pseudo-pressure size mismatch");
  Vec chamber(3 * geom.n_segments);
  for (int seg = 0; seg < geom.n_segments; ++seg) {
    const double px = pseudo(2 * seg);
    const double py = pseudo(2 * seg + 1);
    double raw[3];
    double raw_min = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double a = geom.chamber_angles[seg][i];
      raw[i] = (2.0 / 3.0) * (px * std::cos(a) + py * std::sin(a));
      raw_min = std::min(raw_min, raw[i]);
    }
    const double shift = std::max(0.0, -raw_min);
    for (int i = 0; i < 3; ++i) chamber(3 * seg + i) = raw[i] + shift;
  }
  return chamber;
}

Vec chamber_to_pseudo(const Vec& chamber, const ArmGeometry& geom) {
  if (chamber.size() != 3 * geom.n_segments)
    throw InvalidGeometry("chamber_to_pseudo: chamber pressure size mismatch");
  for (int i = 0; i < chamber.size(); ++i)
    if (chamber(i) < 0.0) throw NegativePressure("chamber_to_pseudo: negative chamber pressure");
  Vec pseudo = Vec::Zero(geom.n_inputs());
  for (int seg = 0; seg < geom.n_segments; ++seg) {
    for (int i = 0; i < 3; ++i) {
      const double a = geom.chamber_angles[seg][i];
      pseudo(2 * seg) += chamber(3 * seg + i) * std::cos(a);
      pseudo(2 * seg + 1) += chamber(3 * seg + i) * std::sin(a);
    }
  }
  return pseudo;
}

}  // namespace softarm
