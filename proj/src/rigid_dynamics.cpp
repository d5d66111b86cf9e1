#include "softarm/rigid_dynamics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace softarm {

namespace {

Eigen::Matrix3d axis_rotation(int axis, double a) {
  // axis: 0 = x, 1 = y
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  if (axis == 0) {
    r << 1, 0, 0, 0, c, -s, 0, s, c;
  } else {
    r << c, 0, s, 0, 1, 0, -s, 0, c;
  }
  return r;
}

// d(chord_length_dtheta)/d(theta) / theta-free pieces; see mapping_jacobian_dot
double chord_ratio_dtheta(double theta, double l0) {
  // d/d theta of (h'(theta)/theta); series for small theta
  if (std::abs(theta) <= 1e-2) return l0 * theta / 240.0;
  const double h1 = chord_length_dtheta(theta, l0);
  const double u = 0.5 * theta;
  // h''(theta) = l0/4 * sinc''(u), sinc''(x) = -sin x/x - 2 cos x/x^2 + 2 sin x/x^3
  const double sinc2 = -std::sin(u) / u - 2.0 * std::cos(u) / (u * u) + 2.0 * std::sin(u) / (u * u * u);
  const double h2 = 0.25 * l0 * sinc2;
  return (h2 * theta - h1) / (theta * theta);
}

}  // namespace

void DynamicsParams::validate(const ArmGeometry& geom) const {
  if (!(stiffness >= 0.0)) throw InvalidGeometry("stiffness must be >= 0");
  if (!(damping >= 0.0)) throw InvalidGeometry("damping must be >= 0");
  if (alloc_gain.size() != static_cast<std::size_t>(geom.n_segments))
    throw InvalidGeometry("alloc_gain: expected one entry per segment");
  if (!(cond_limit > 1.0)) throw InvalidGeometry("cond_limit must be > 1");
}

struct AugmentedChain::FrameState {
  Eigen::Matrix3d rot;   // world <- child
  Eigen::Vector3d pos;   // child origin in world
  Eigen::Vector3d axis;  // joint axis in world
  Eigen::Vector3d omega, vel;  // of the child frame / its origin point
  Eigen::Vector3d alpha, acc;
};

AugmentedChain::AugmentedChain(const ArmGeometry& geom) : geom_(geom) {
  geom.validate();
  int section = 0;
  for (int seg = 0; seg < geom.n_segments; ++seg) {
    for (int s = 0; s < geom.pcc_per_segment; ++s, ++section) {
      const double l0 = geom.section_rest_length(section);
      const double m_sec = geom.segment_mass[seg] / geom.pcc_per_segment;
      const bool first_joint = joints_.empty();
      const bool segment_start = (s == 0);

      Joint j0{JointType::RevoluteY, {}, 0.0, Eigen::Vector3d::Zero(), Eigen::Matrix3d::Zero()};
      if (first_joint) {
        j0.pre = geom.base_frame;
      } else if (segment_start) {
        j0.pre.translation = geom.connector_offset[seg - 1];
      }
      joints_.push_back(j0);

      joints_.push_back({JointType::RevoluteX, {}, 0.0, Eigen::Vector3d::Zero(),
                         Eigen::Matrix3d::Zero()});

      joints_.push_back({JointType::PrismaticZ, {}, 0.0, Eigen::Vector3d::Zero(),
                         Eigen::Matrix3d::Zero()});

      joints_.push_back({JointType::RevoluteY, {}, 0.0, Eigen::Vector3d::Zero(),
                         Eigen::Matrix3d::Zero()});

      // section rod on the section's final frame, centered at the rest-length
      // midpoint behind the chord end; every joint of the section carries it
      Joint j4{JointType::RevoluteX, {}, m_sec, Eigen::Vector3d(0, 0, -0.5 * l0),
               Eigen::Matrix3d::Zero()};
      const double rod = m_sec * l0 * l0 / 12.0;
      j4.inertia.diagonal() << rod, rod, 0.0;
      if (s == geom.pcc_per_segment - 1) {
        // connector point mass folded into the same body
        const double mc = geom.connector_mass[seg];
        const Eigen::Vector3d cc = 0.5 * geom.connector_offset[seg];
        const double mt = m_sec + mc;
        const Eigen::Vector3d com = (m_sec * j4.com + mc * cc) / (mt > 0.0 ? mt : 1.0);
        auto shift = [](double m, const Eigen::Vector3d& d) -> Eigen::Matrix3d {
          return m * (d.squaredNorm() * Eigen::Matrix3d::Identity() - d * d.transpose());
        };
        j4.inertia += shift(m_sec, j4.com - com) + shift(mc, cc - com);
        j4.mass = mt;
        j4.com = com;
      }
      joints_.push_back(j4);
    }
  }
  tool_offset_ = geom.connector_offset[geom.n_segments - 1];
}

Vec AugmentedChain::map_to_augmented(const Vec& q) const {
  if (!q.allFinite()) throw NonFiniteInput("map_to_augmented: non-finite curvature");
  const int ns = geom_.n_sections();
  Vec xi(5 * ns);
  for (int s = 0; s < ns; ++s) {
    const double tx = q(2 * s), ty = q(2 * s + 1);
    const double theta = std::hypot(tx, ty);
    xi(5 * s + 0) = -0.5 * tx;
    xi(5 * s + 1) = -0.5 * ty;
    xi(5 * s + 2) = chord_length(theta, geom_.section_rest_length(s));
    xi(5 * s + 3) = -0.5 * tx;
    xi(5 * s + 4) = -0.5 * ty;
  }
  return xi;
}

Mat AugmentedChain::mapping_jacobian(const Vec& q) const {
  const int ns = geom_.n_sections();
  Mat jac = Mat::Zero(5 * ns, 2 * ns);
  for (int s = 0; s < ns; ++s) {
    const double tx = q(2 * s), ty = q(2 * s + 1);
    const double theta = std::hypot(tx, ty);
    const double ratio = chord_dtheta_over_theta(theta, geom_.section_rest_length(s));
    jac(5 * s + 0, 2 * s) = -0.5;
    jac(5 * s + 1, 2 * s + 1) = -0.5;
    jac(5 * s + 2, 2 * s) = ratio * tx;
    jac(5 * s + 2, 2 * s + 1) = ratio * ty;
    jac(5 * s + 3, 2 * s) = -0.5;
    jac(5 * s + 4, 2 * s + 1) = -0.5;
  }
  return jac;
}

Mat AugmentedChain::mapping_jacobian_dot(const Vec& q, const Vec& qd) const {
  const int ns = geom_.n_sections();
  Mat jdot = Mat::Zero(5 * ns, 2 * ns);
  for (int s = 0; s < ns; ++s) {
    const double tx = q(2 * s), ty = q(2 * s + 1);
    const double vx = qd(2 * s), vy = qd(2 * s + 1);
    const double theta = std::hypot(tx, ty);
    const double l0 = geom_.section_rest_length(s);
    const double ratio = chord_dtheta_over_theta(theta, l0);
    const double dratio = chord_ratio_dtheta(theta, l0);
    // d/dt (ratio * tx) = dratio/dtheta * theta_dot * tx + ratio * vx, with
    // theta_dot * theta = tx vx + ty vy (finite limit folded into dratio form)
    double ddx, ddy;
    if (theta > 1e-12) {
      const double theta_dot = (tx * vx + ty * vy) / theta;
      ddx = dratio * theta_dot * tx + ratio * vx;
      ddy = dratio * theta_dot * ty + ratio * vy;
    } else {
      ddx = ratio * vx;
      ddy = ratio * vy;
    }
    jdot(5 * s + 2, 2 * s) = ddx;
    jdot(5 * s + 2, 2 * s + 1) = ddy;
  }
  return jdot;
}

void AugmentedChain::forward_pass(const Vec& xi, const Vec& xi_dot, const Vec& xi_ddot,
                                  std::vector<FrameState>& frames) const {
  const int n = n_joints();
  frames.resize(n);
  Eigen::Matrix3d rot_par = Eigen::Matrix3d::Identity();
  Eigen::Vector3d pos_par = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega_par = Eigen::Vector3d::Zero();
  Eigen::Vector3d vel_par = Eigen::Vector3d::Zero();
  Eigen::Vector3d alpha_par = Eigen::Vector3d::Zero();
  Eigen::Vector3d acc_par = Eigen::Vector3d::Zero();  // gravity is injected by callers

  for (int i = 0; i < n; ++i) {
    const Joint& jnt = joints_[i];
    FrameState& f = frames[i];
    const Eigen::Matrix3d rot_jf = rot_par * jnt.pre.rotation;
    const Eigen::Vector3d pos_jf = pos_par + rot_par * jnt.pre.translation;
    const double qi = xi(i), vi = xi_dot(i), ai = xi_ddot(i);

    switch (jnt.type) {
      case JointType::RevoluteY:
      case JointType::RevoluteX: {
        const int ax = (jnt.type == JointType::RevoluteY) ? 1 : 0;
        f.axis = rot_jf.col(ax);
        f.rot = rot_jf * axis_rotation(ax, qi);
        f.pos = pos_jf;
        const Eigen::Vector3d r = f.pos - pos_par;
        f.omega = omega_par + f.axis * vi;
        f.vel = vel_par + omega_par.cross(r);
        f.alpha = alpha_par + f.axis * ai + omega_par.cross(f.axis * vi);
        f.acc = acc_par + alpha_par.cross(r) + omega_par.cross(omega_par.cross(r));
        break;
      }
      case JointType::PrismaticZ: {
        f.axis = rot_jf.col(2);
        f.rot = rot_jf;
        f.pos = pos_jf + f.axis * qi;
        const Eigen::Vector3d r = f.pos - pos_par;
        f.omega = omega_par;
        f.vel = vel_par + omega_par.cross(r) + f.axis * vi;
        f.alpha = alpha_par;
        f.acc = acc_par + alpha_par.cross(r) + omega_par.cross(omega_par.cross(r)) +
                2.0 * omega_par.cross(f.axis * vi) + f.axis * ai;
        break;
      }
    }
    rot_par = f.rot;
    pos_par = f.pos;
    omega_par = f.omega;
    vel_par = f.vel;
    alpha_par = f.alpha;
    acc_par = f.acc;
  }
}

Eigen::Vector3d AugmentedChain::tip_position(const Vec& xi) const {
  std::vector<FrameState> frames;
  const Vec zero = Vec::Zero(n_joints());
  forward_pass(xi, zero, zero, frames);
  const FrameState& last = frames.back();
  return last.pos + last.rot * tool_offset_;
}

Vec AugmentedChain::inverse_dynamics(const Vec& xi, const Vec& xi_dot, const Vec& xi_ddot,
                                     bool with_gravity) const {
  const int n = n_joints();
  std::vector<FrameState> frames;
  forward_pass(xi, xi_dot, xi_ddot, frames);
  // gravity handled by offsetting all accelerations with -g (fixed-base trick)
  const Eigen::Vector3d g_off = with_gravity ? Eigen::Vector3d(-geom_.gravity) : Eigen::Vector3d::Zero();

  Vec tau(n);
  Eigen::Vector3d f_child = Eigen::Vector3d::Zero();   // force from joint i+1 on subtree
  Eigen::Vector3d n_child = Eigen::Vector3d::Zero();   // moment about frames[i+1].pos
  Eigen::Vector3d p_child = Eigen::Vector3d::Zero();
  for (int i = n - 1; i >= 0; --i) {
    const FrameState& f = frames[i];
    const Joint& jnt = joints_[i];
    Eigen::Vector3d force = Eigen::Vector3d::Zero();
    Eigen::Vector3d moment = Eigen::Vector3d::Zero();  // about f.pos
    if (jnt.mass > 0.0 || !jnt.inertia.isZero(0.0)) {
      const Eigen::Vector3d rc = f.rot * jnt.com;
      const Eigen::Vector3d acc_com =
          f.acc + g_off + f.alpha.cross(rc) + f.omega.cross(f.omega.cross(rc));
      const Eigen::Matrix3d iw = f.rot * jnt.inertia * f.rot.transpose();
      force = jnt.mass * acc_com;
      moment = iw * f.alpha + f.omega.cross(iw * f.omega) + rc.cross(force);
    }
    if (i < n - 1) {
      force += f_child;
      moment += n_child + (p_child - f.pos).cross(f_child);
    }
    tau(i) = (jnt.type == JointType::PrismaticZ) ? f.axis.dot(force) : f.axis.dot(moment);
    f_child = force;
    n_child = moment;
    p_child = f.pos;
  }
  return tau;
}

Mat AugmentedChain::inertia_matrix(const Vec& xi) const {
  const int n = n_joints();
  std::vector<FrameState> frames;
  const Vec zero = Vec::Zero(n);
  forward_pass(xi, zero, zero, frames);

  Mat h = Mat::Zero(n, n);
  // composite body of the subtree rooted at joint j, accumulated tip -> base
  double mass_c = 0.0;
  Eigen::Vector3d com_c = Eigen::Vector3d::Zero();
  Eigen::Matrix3d inertia_c = Eigen::Matrix3d::Zero();  // about com_c, world axes

  for (int j = n - 1; j >= 0; --j) {
    const FrameState& fj = frames[j];
    const Joint& jnt = joints_[j];
    if (jnt.mass > 0.0 || !jnt.inertia.isZero(0.0)) {
      const Eigen::Vector3d x_b = fj.pos + fj.rot * jnt.com;
      const Eigen::Matrix3d i_b = fj.rot * jnt.inertia * fj.rot.transpose();
      const double m_new = mass_c + jnt.mass;
      const Eigen::Vector3d com_new =
          (m_new > 0.0) ? ((mass_c * com_c + jnt.mass * x_b) / m_new).eval() : com_c;
      auto shift = [](double m, const Eigen::Vector3d& d) -> Eigen::Matrix3d {
        return m * (d.squaredNorm() * Eigen::Matrix3d::Identity() - d * d.transpose());
      };
      inertia_c = inertia_c + shift(mass_c, com_c - com_new) + i_b + shift(jnt.mass, x_b - com_new);
      com_c = com_new;
      mass_c = m_new;
    }
    if (mass_c == 0.0 && inertia_c.isZero(0.0)) continue;

    // spatial force caused by unit acceleration of joint j on its subtree
    Eigen::Vector3d f_lin, n_com;
    if (jnt.type == JointType::PrismaticZ) {
      f_lin = mass_c * fj.axis;
      n_com = Eigen::Vector3d::Zero();
    } else {
      f_lin = mass_c * fj.axis.cross(com_c - fj.pos);
      n_com = inertia_c * fj.axis;
    }
    for (int k = j; k >= 0; --k) {
      const FrameState& fk = frames[k];
      double v;
      if (joints_[k].type == JointType::PrismaticZ) {
        v = fk.axis.dot(f_lin);
      } else {
        v = fk.axis.dot(n_com + (com_c - fk.pos).cross(f_lin));
      }
      h(k, j) = v;
      h(j, k) = v;
    }
  }
  return h;
}

double AugmentedChain::gravity_potential(const Vec& xi) const {
  std::vector<FrameState> frames;
  const Vec zero = Vec::Zero(n_joints());
  forward_pass(xi, zero, zero, frames);
  double v = 0.0;
  for (int i = 0; i < n_joints(); ++i) {
    const Joint& jnt = joints_[i];
    if (jnt.mass <= 0.0) continue;
    const Eigen::Vector3d x = frames[i].pos + frames[i].rot * jnt.com;
    v -= jnt.mass * geom_.gravity.dot(x);
  }
  return v;
}

JointSpaceTerms joint_space_terms(const Vec& xi, const Vec& xi_dot, const AugmentedChain& chain) {
  JointSpaceTerms out;
  const Vec zero = Vec::Zero(chain.n_joints());
  out.inertia = chain.inertia_matrix(xi);
  out.gravity = chain.inverse_dynamics(xi, zero, zero, true);
  out.coriolis = chain.inverse_dynamics(xi, xi_dot, zero, true) - out.gravity;
  return out;
}

DynamicsTerms dynamics_terms(const Vec& q, const Vec& qd, const AugmentedChain& chain,
                             const DynamicsParams& params) {
  if (!q.allFinite() || !qd.allFinite()) throw NonFiniteInput("dynamics_terms: non-finite state");
  const ArmGeometry& geom = chain.geometry();
  const int nq = geom.q_size();

  const Vec xi = chain.map_to_augmented(q);
  const Mat jm = chain.mapping_jacobian(q);
  const Vec xi_dot = jm * qd;
  // convective joint acceleration at q_dd = 0, so the reduced system stays
  // exactly Lagrangian (the energy balance depends on it)
  const Vec xi_conv = chain.mapping_jacobian_dot(q, qd) * qd;

  DynamicsTerms out;
  out.inertia = jm.transpose() * chain.inertia_matrix(xi) * jm;
  out.gravity = jm.transpose() * chain.inverse_dynamics(xi, Vec::Zero(xi.size()), Vec::Zero(xi.size()), true);
  out.coriolis = jm.transpose() * chain.inverse_dynamics(xi, xi_dot, xi_conv, true) - out.gravity;
  out.stiffness_matrix = params.stiffness * Mat::Identity(nq, nq);
  out.damping_matrix = params.damping * Mat::Identity(nq, nq);
  out.alloc = Mat::Zero(nq, geom.n_inputs());
  for (int s = 0; s < geom.n_sections(); ++s) {
    const int seg = s / geom.pcc_per_segment;
    out.alloc.block<2, 2>(2 * s, 2 * seg) =
        params.alloc_gain[seg] * Eigen::Matrix2d::Identity();
  }

  Eigen::SelfAdjointEigenSolver<Mat> es(out.inertia);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin > params.cond_limit)
    throw SingularInertia("dynamics_terms: inertia matrix ill conditioned");
  return out;
}

DynamicsTerms dynamics_terms(const Vec& q, const Vec& qd, const ArmGeometry& geom,
                             const DynamicsParams& params) {
  return dynamics_terms(q, qd, AugmentedChain(geom), params);
}

Vec plant_accel(const Vec& q, const Vec& qd, const Vec& pseudo, const DynamicsTerms& terms) {
  const Vec rhs = terms.alloc * pseudo - terms.coriolis - terms.gravity -
                  terms.stiffness_matrix * q - terms.damping_matrix * qd;
  Eigen::LLT<Mat> llt(terms.inertia);
  if (llt.info() != Eigen::Success) throw SingularInertia("plant_accel: inertia not SPD");
  return llt.solve(rhs);
}

double mechanical_energy(const Vec& q, const Vec& qd, const AugmentedChain& chain,
                         const DynamicsParams& params) {
  const Vec xi = chain.map_to_augmented(q);
  const Mat jm = chain.mapping_jacobian(q);
  const Vec xi_dot = jm * qd;
  const double kinetic = 0.5 * xi_dot.dot(chain.inertia_matrix(xi) * xi_dot);
  const double elastic = 0.5 * params.stiffness * q.squaredNorm();
  return kinetic + elastic + chain.gravity_potential(xi);
}

}  // namespace softarm
