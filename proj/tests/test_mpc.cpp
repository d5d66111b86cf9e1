#include <doctest.h>

#include <cmath>

#include "softarm/controller.hpp"
#include "softarm/mpc.hpp"
#include "softarm/rng.hpp"

using namespace softarm;

namespace {

ArmGeometry default_geom() {
  ArmGeometry g;
  g.validate();
  return g;
}

// hand-built instance on integrator dynamics, ee = (q, 0, 0)
MpcInstance toy_instance(int horizon, double ts, int nq = 1) {
  MpcInstance inst;
  inst.nq = nq;
  inst.nx = 2 * nq;
  inst.nu = nq;
  inst.cfg.horizon = horizon;
  inst.cfg.ts = ts;
  inst.cfg.q_weight = Eigen::Matrix3d::Identity();
  inst.cfg.qn_weight = Eigen::Matrix3d::Identity();
  inst.cfg.s_weight = 1e-6 * Mat::Identity(nq, nq);
  inst.cfg.r_weight = 1e-6 * Mat::Identity(nq, nq);
  inst.cfg.rd_weight = 1e-6 * Mat::Identity(nq, nq);
  inst.cfg.p_min = Vec::Constant(nq, -1e6);
  inst.cfg.p_max = Vec::Constant(nq, 1e6);
  inst.cfg.du_max = Vec::Constant(nq, 1e6);
  inst.cfg.tube_clamp = Vec::Constant(nq, 1.0);
  inst.cfg.x0_box_q = Vec::Constant(nq, 0.1);
  inst.cfg.x0_box_qd = Vec::Constant(nq, 1.0);

  // exact double integrator
  inst.dyn.Ts = ts;
  inst.dyn.A_d = Mat::Identity(2 * nq, 2 * nq);
  inst.dyn.A_d.topRightCorner(nq, nq) = ts * Mat::Identity(nq, nq);
  inst.dyn.B_d = Mat::Zero(2 * nq, nq);
  inst.dyn.B_d.topRows(nq) = 0.5 * ts * ts * Mat::Identity(nq, nq);
  inst.dyn.B_d.bottomRows(nq) = ts * Mat::Identity(nq, nq);
  inst.dyn.W_d = Vec::Zero(2 * nq);

  inst.ref = Mat::Zero(3, horizon + 1);
  inst.x0 = Vec::Zero(2 * nq);
  inst.u_old = Vec::Zero(nq);
  inst.ee.position = [nq](const Vec& q) {
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
    for (int i = 0; i < std::min<int>(3, nq); ++i) p(i) = q(i);
    return p;
  };
  inst.ee.jacobian = [nq](const Vec&) {
    Mat j = Mat::Zero(3, nq);
    for (int i = 0; i < std::min<int>(3, nq); ++i) j(i, i) = 1.0;
    return j;
  };
  return inst;
}

Mat rollout(const MpcInstance& inst, const Vec& x0, const Mat& u) {
  Mat x(inst.nx, u.cols() + 1);
  x.col(0) = x0;
  for (int k = 0; k < u.cols(); ++k)
    x.col(k + 1) = inst.dyn.A_d * x.col(k) + inst.dyn.B_d * u.col(k) + inst.dyn.W_d;
  return x;
}

}  // namespace

TEST_CASE("tube feedback") {
  const Vec u0 = Vec::Constant(1, 1.0);
  const Mat gain = Mat::Constant(1, 2, 2.0);
  Vec meas(2), nom(2);
  const Vec clamp = Vec::Constant(1, 0.5);
  const Vec pmin = Vec::Constant(1, -10.0), pmax = Vec::Constant(1, 10.0);

  meas << 0.05, 0.05;  // correction 2*(0.05+0.05) = 0.2
  nom.setZero();
  bool clamped = true;
  Vec p = tube_feedback(u0, gain, meas, nom, clamp, pmin, pmax, &clamped);
  CHECK(p(0) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK_FALSE(clamped);

  meas << 0.5, 0.5;  // correction 2.0 exceeds the clamp
  p = tube_feedback(u0, gain, meas, nom, clamp, pmin, pmax, &clamped);
  CHECK(p(0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(clamped);

  p = tube_feedback(u0, Mat::Zero(1, 2), meas, nom, clamp, pmin, pmax, &clamped);
  CHECK(p(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_FALSE(clamped);

  p = tube_feedback(u0, gain, meas, meas, clamp, pmin, pmax, &clamped);
  CHECK(p(0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("reference window length is enforced") {
  auto geom = default_geom();
  auto cfg = MpcConfig::defaults(geom);
  DiscreteDynamics dyn;
  dyn.Ts = cfg.ts;
  dyn.A_d = Mat::Identity(8, 8);
  dyn.B_d = Mat::Zero(8, 4);
  dyn.W_d = Vec::Zero(8);
  const Mat ref_short = Mat::Zero(3, cfg.horizon);  // one sample short
  CHECK_THROWS_AS(
      build_problem(Vec::Zero(4), Vec::Zero(4), ref_short, dyn, cfg, geom, Vec::Zero(4)),
      RefTooShort);
}

TEST_CASE("input constraints active only over the early window") {
  // track a far target so the optimizer saturates what it is allowed to
  MpcInstance inst = toy_instance(7, 0.1);
  inst.cfg.p_min = Vec::Constant(1, -2.0);
  inst.cfg.p_max = Vec::Constant(1, 2.0);
  inst.cfg.du_max = Vec::Constant(1, 100.0);
  inst.ref.row(0).setConstant(50.0);

  const auto sol = sqp_solve(inst);
  REQUIRE(sol.feasible);
  // ceil(7/4) = 2: u(0), u(1) bounded, later steps free to exceed
  CHECK(sol.u(0, 0) <= 2.0 + 1e-6);
  CHECK(sol.u(0, 1) <= 2.0 + 1e-6);
  CHECK(sol.u(0, 0) == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(sol.u(0, 1) == doctest::Approx(2.0).epsilon(1e-5));
  bool later_exceeds = false;
  for (int k = 2; k < 7; ++k) later_exceeds |= (sol.u(0, k) > 2.0 + 1e-3);
  CHECK(later_exceeds);

  MpcInstance floor_inst = inst;
  floor_inst.cfg.floor_horizon_window = true;  // floor(7/4) = 1
  const auto sol_floor = sqp_solve(floor_inst);
  REQUIRE(sol_floor.feasible);
  CHECK(sol_floor.u(0, 0) <= 2.0 + 1e-6);
  CHECK(sol_floor.u(0, 1) > 2.0 + 1e-3);
}

TEST_CASE("perfect-tracking feasible point gives zero objective") {
  MpcInstance inst = toy_instance(5, 0.1);
  inst.cfg.s_weight.setZero();
  inst.cfg.r_weight.setZero();
  inst.cfg.rd_weight.setZero();
  // reference generated by a feasible rollout
  Mat u_ref(1, 5);
  u_ref << 0.8, -0.3, 0.2, 0.0, -0.5;
  const Mat x_ref = rollout(inst, inst.x0, u_ref);
  for (int k = 0; k <= 5; ++k) inst.ref(0, k) = x_ref(0, k);

  const auto sol = sqp_solve(inst);
  REQUIRE(sol.feasible);
  CHECK(sol.objective >= 0.0);
  CHECK(sol.objective < 1e-6);
}

TEST_CASE("stationary at an equilibrium with consistent drift") {
  auto geom = default_geom();
  AugmentedChain chain(geom);
  DynamicsParams par;

  Vec p_eq(4);
  p_eq << 4.0, -2.0, 3.0, 1.0;
  Vec q = Vec::Zero(4);
  for (int it = 0; it < 300; ++it) {
    const auto terms = dynamics_terms(q, Vec::Zero(4), chain, par);
    q = 0.5 * q + 0.5 * Vec(terms.stiffness_matrix.ldlt().solve(terms.alloc * p_eq - terms.gravity));
  }
  const auto terms = dynamics_terms(q, Vec::Zero(4), chain, par);
  REQUIRE(plant_accel(q, Vec::Zero(4), p_eq, terms).cwiseAbs().maxCoeff() < 1e-10);

  auto cfg = MpcConfig::defaults(geom);
  cfg.exact_drift = true;
  cfg.q_weight = Eigen::Matrix3d::Identity();
  cfg.qn_weight = Eigen::Matrix3d::Identity();
  cfg.s_weight.setZero();
  cfg.r_weight.setZero();
  cfg.rd_weight = 1e-3 * Mat::Identity(4, 4);  // pins input differences only
  const auto dyn = discretize(continuous_ss(terms), cfg.ts, true);

  const Eigen::Vector3d ee = forward_kinematics(q, geom, false).position;
  Mat ref(3, cfg.horizon + 1);
  for (int k = 0; k <= cfg.horizon; ++k) ref.col(k) = ee;

  MpcInstance inst = build_problem(q, Vec::Zero(4), ref, dyn, cfg, geom, p_eq);
  const auto sol = sqp_solve(inst);
  REQUIRE(sol.feasible);
  // stationary point: constant input, constant predicted state
  for (int k = 0; k < cfg.horizon; ++k)
    CHECK((sol.u.col(k) - sol.u.col(0)).cwiseAbs().maxCoeff() < 1e-3);
  for (int k = 0; k <= cfg.horizon; ++k)
    CHECK((sol.x.col(k) - sol.x.col(0)).cwiseAbs().maxCoeff() < 1e-3);
  CHECK((sol.u.col(0) - p_eq).cwiseAbs().maxCoeff() < 0.05);
  CHECK(sol.objective < 1e-4);
}

TEST_CASE("obstacle penalty values") {
  MpcInstance inst = toy_instance(3, 0.1);
  Mat u = Mat::Zero(1, 3);
  Mat x = rollout(inst, inst.x0, u);  // stays at origin, ee = (0,0,0)
  Mat eps(0, 3);

  const double base = true_cost(inst, x, u, eps);

  MpcInstance pen = inst;
  add_obstacle_penalty(pen, {{Eigen::Vector3d::Zero(), 0.05}}, 2.5, 100.0);
  // ee sits exactly on the obstacle for k = 0,1,2 -> adds L per stage
  CHECK(true_cost(pen, x, u, eps) - base == doctest::Approx(3 * 2.5).epsilon(1e-12));

  MpcInstance pen2 = inst;
  add_obstacle_penalty(pen2, {{Eigen::Vector3d(0.1, 0, 0), 0.05}}, 2.5, 100.0);
  // distance 0.1 with width 100: L e^{-1} per stage
  CHECK(true_cost(pen2, x, u, eps) - base ==
        doctest::Approx(3 * 2.5 * std::exp(-1.0)).epsilon(1e-12));

  MpcInstance pen3 = inst;
  add_obstacle_penalty(pen3, {{Eigen::Vector3d(1e3, 0, 0), 0.05}}, 2.5, 100.0);
  CHECK(true_cost(pen3, x, u, eps) - base < 1e-300);
}

TEST_CASE("obstacle penalty off coincides with the plain controller") {
  MpcInstance plain = toy_instance(5, 0.1);
  plain.ref.row(0).setConstant(0.8);
  MpcInstance with_list = plain;
  with_list.cfg.obstacles = {{Eigen::Vector3d(0.4, 0, 0), 0.05}};
  with_list.cfg.penalty_gain = 0.0;  // disabled

  const auto a = sqp_solve(plain);
  const auto b = sqp_solve(with_list);
  REQUIRE(a.feasible);
  CHECK((a.u - b.u).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.objective == b.objective);
}

TEST_CASE("soft state constraints") {
  SUBCASE("non-binding box keeps slack at zero") {
    MpcInstance inst = toy_instance(4, 0.1);
    inst.ref.row(0).setConstant(0.2);
    soften_state_constraints(inst, Mat::Identity(1, 1), Vec::Constant(1, 5.0),
                             Mat::Identity(1, 1));
    const auto sol = sqp_solve(inst);
    REQUIRE(sol.feasible);
    CHECK(sol.eps.cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("binding box against hand-solved stationarity") {
    MpcInstance inst = toy_instance(2, 1.0);
    // state transition q(k+1) = q(k) + u(k), velocity decoupled
    inst.dyn.A_d = Mat::Identity(2, 2);
    inst.dyn.B_d = Mat::Zero(2, 1);
    inst.dyn.B_d(0, 0) = 1.0;
    inst.cfg.s_weight.setZero();
    inst.cfg.r_weight.setZero();
    inst.cfg.rd_weight.setZero();
    inst.ref.row(0).setConstant(1.0);
    soften_state_constraints(inst, Mat::Identity(1, 1), Vec::Constant(1, 0.3),
                             Mat::Identity(1, 1));
    const auto sol = sqp_solve(inst);
    REQUIRE(sol.feasible);
    // minimizing (q1-1)^2 + eps1^2 with q1 <= 0.3 + eps1 gives q1 = 0.65
    CHECK(sol.x(0, 1) == doctest::Approx(0.65).epsilon(1e-4));
    CHECK(sol.eps(0, 1) == doctest::Approx(0.35).epsilon(1e-3));
    CHECK(sol.x(0, 2) == doctest::Approx(1.0).epsilon(1e-4));  // no soft row at the last step
    CHECK(sol.eps(0, 0) < 1e-6);
  }

  SUBCASE("pressure bounds stay hard in a softened instance") {
    MpcInstance inst = toy_instance(4, 0.1);
    inst.cfg.p_min = Vec::Constant(1, -0.5);
    inst.cfg.p_max = Vec::Constant(1, 0.5);
    inst.ref.row(0).setConstant(30.0);
    soften_state_constraints(inst, Mat::Identity(1, 1), Vec::Constant(1, 100.0),
                             Mat::Identity(1, 1));
    const auto sol = sqp_solve(inst);
    REQUIRE(sol.feasible);
    CHECK(sol.u(0, 0) <= 0.5 + 1e-6);

    // contradictory slew vs previous input must be infeasible, never slackened
    MpcInstance bad = inst;
    bad.u_old = Vec::Constant(1, 10.0);
    bad.cfg.du_max = Vec::Constant(1, 0.1);  // u(0) in [9.9, 10.1], bounds [-0.5, 0.5]
    const auto sol_bad = sqp_solve(bad);
    CHECK_FALSE(sol_bad.feasible);
    CHECK(sol_bad.qp_status == QpStatus::Infeasible);
    CHECK(sol_bad.diagnostic.find("infeasible") != std::string::npos);
  }
}

TEST_CASE("sqp on linear kinematics terminates in one productive iteration") {
  MpcInstance inst = toy_instance(5, 0.1);
  inst.ref.row(0).setConstant(1.5);
  inst.cfg.sqp.max_outer = 8;
  const auto full = sqp_solve(inst);
  MpcInstance single = inst;
  single.cfg.sqp.max_outer = 1;
  const auto one = sqp_solve(single);
  REQUIRE(full.feasible);
  REQUIRE(one.feasible);
  CHECK((full.u - one.u).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(std::abs(full.objective - one.objective) < 1e-10);
  CHECK(full.sqp_iterations <= 2);
}

TEST_CASE("sqp cost non-increasing with more outer iterations") {
  auto geom = default_geom();
  auto cfg = MpcConfig::defaults(geom);
  cfg.exact_drift = true;
  AugmentedChain chain(geom);
  DynamicsParams par;
  const Vec q0 = Vec::Zero(4);
  const auto dyn = discretize(continuous_ss(dynamics_terms(q0, Vec::Zero(4), chain, par)), cfg.ts);
  Mat ref(3, cfg.horizon + 1);
  for (int k = 0; k <= cfg.horizon; ++k) ref.col(k) = Eigen::Vector3d(0.08, 0.02, 0.27);

  double prev_cost = std::numeric_limits<double>::infinity();
  for (int outer : {1, 2, 4, 6}) {
    auto c = cfg;
    c.sqp.max_outer = outer;
    c.sqp.tol = 0.0;
    MpcInstance inst = build_problem(q0, Vec::Zero(4), ref, dyn, c, geom, Vec::Zero(4));
    const auto sol = sqp_solve(inst);
    REQUIRE(sol.feasible);
    CHECK(sol.objective <= prev_cost + 1e-9);
    prev_cost = sol.objective;
  }
}

TEST_CASE("double integrator tracking against exhaustive enumeration") {
  MpcInstance inst = toy_instance(3, 0.5);
  inst.cfg.s_weight = 1e-4 * Mat::Identity(1, 1);
  inst.cfg.r_weight = 1e-4 * Mat::Identity(1, 1);
  inst.cfg.rd_weight = 1e-4 * Mat::Identity(1, 1);
  // reference: rollout of an on-grid input sequence that ends at rest
  Mat u_gen(1, 3);
  u_gen << 1.0, -0.5, -0.5;
  const Mat x_gen = rollout(inst, inst.x0, u_gen);
  REQUIRE(std::abs(x_gen(1, 3)) < 1e-12);
  for (int k = 0; k <= 3; ++k) inst.ref(0, k) = x_gen(0, k);

  const auto sol = sqp_solve(inst);
  REQUIRE(sol.feasible);

  // brute force over the 5-level grid, honoring the terminal rest constraint
  const double levels[5] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  double best = std::numeric_limits<double>::infinity();
  Mat u(1, 3);
  Mat eps(0, 3);
  for (double u0 : levels)
    for (double u1 : levels)
      for (double u2 : levels) {
        u << u0, u1, u2;
        const Mat x = rollout(inst, inst.x0, u);
        if (std::abs(x(1, 3)) > 1e-9) continue;
        best = std::min(best, true_cost(inst, x, u, eps));
      }

  CHECK(sol.objective <= best + 1e-9);
  CHECK(best - sol.objective < 0.05 * std::max(best, 1e-3));
}

TEST_CASE("solution satisfies the frozen model and terminal rest") {
  auto geom = default_geom();
  auto cfg = MpcConfig::defaults(geom);
  cfg.sqp.max_outer = 30;  // let the outer loop converge fully
  cfg.sqp.tol = 1e-10;
  AugmentedChain chain(geom);
  DynamicsParams par;
  Vec q0(4), qd0(4);
  q0 << 0.2, -0.1, 0.3, 0.05;
  qd0 << 0.1, 0.0, -0.2, 0.1;
  const auto dyn = discretize(continuous_ss(dynamics_terms(q0, qd0, chain, par)), cfg.ts);
  Mat ref(3, cfg.horizon + 1);
  for (int k = 0; k <= cfg.horizon; ++k) ref.col(k) = Eigen::Vector3d(0.05, 0.05, 0.27);
  MpcInstance inst = build_problem(q0, qd0, ref, dyn, cfg, geom, Vec::Zero(4));
  const auto sol = sqp_solve(inst);
  REQUIRE(sol.feasible);
  CHECK(dynamics_residual(inst, sol.x, sol.u) < 1e-6);
  CHECK(sol.x.col(cfg.horizon).tail(4).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((sol.x.col(0) - inst.x0).cwiseAbs().maxCoeff() < 1e-9);

  // warm-started resolve of the unchanged problem keeps the objective
  SqpWarmStart warm{sol.x, sol.u, sol.eps, sol.admm_dual};
  const auto again = sqp_solve(inst, &warm);
  REQUIRE(again.feasible);
  CHECK(std::abs(again.objective - sol.objective) < 1e-8 * std::max(1.0, std::abs(sol.objective)));
}

TEST_CASE("controller step behavior") {
  auto geom = default_geom();
  DynamicsParams par;
  auto cfg = MpcConfig::defaults(geom);

  SUBCASE("first step applies the nominal input exactly") {
    TubeMpcController ctrl(geom, par, cfg);
    Mat ref(3, cfg.horizon + 1);
    for (int k = 0; k <= cfg.horizon; ++k) ref.col(k) = Eigen::Vector3d(0.03, 0.0, 0.28);
    MpcSolution sol;
    StepDiagnostics diag;
    const Vec p = ctrl.step(Vec::Zero(4), Vec::Zero(4), ref, &sol, &diag);
    CHECK_FALSE(diag.fallback);
    CHECK((p - sol.u.col(0)).cwiseAbs().maxCoeff() == 0.0);  // measured == nominal
  }

  SUBCASE("tube correction is clamped on large deviation") {
    auto cfg_clamp = cfg;
    cfg_clamp.tube_clamp = Vec::Constant(4, 0.05);
    cfg_clamp.dare_q = 100.0;
    cfg_clamp.dare_r = 1e-3;
    TubeMpcController ctrl(geom, par, cfg_clamp);
    Mat ref(3, cfg.horizon + 1);
    for (int k = 0; k <= cfg.horizon; ++k) ref.col(k) = Eigen::Vector3d(0.03, 0.0, 0.28);
    ctrl.step(Vec::Zero(4), Vec::Zero(4), ref);
    // teleport the measurement far from the previous prediction
    Vec q1 = Vec::Constant(4, 0.3), qd1 = Vec::Constant(4, 1.5);
    MpcSolution sol;
    StepDiagnostics diag;
    const Vec p = ctrl.step(q1, qd1, ref, &sol, &diag);
    CHECK(diag.clamp_active);
    CHECK(((p - sol.u.col(0)).cwiseAbs() - cfg_clamp.tube_clamp).maxCoeff() <= 1e-12);
    for (int i = 0; i < 4; ++i) {
      CHECK(p(i) >= cfg.p_min(i) - 1e-12);
      CHECK(p(i) <= cfg.p_max(i) + 1e-12);
    }
  }

  SUBCASE("applied input stays within slew plus clamp across steps") {
    TubeMpcController ctrl(geom, par, cfg);
    Mat ref(3, cfg.horizon + 1);
    for (int k = 0; k <= cfg.horizon; ++k) ref.col(k) = Eigen::Vector3d(0.03, -0.02, 0.28);
    Vec prev = Vec::Zero(4);
    Vec q = Vec::Zero(4), qd = Vec::Zero(4);
    AugmentedChain chain(geom);
    for (int step = 0; step < 8; ++step) {
      const Vec p = ctrl.step(q, qd, ref);
      CHECK(((p - prev).cwiseAbs() - (cfg.du_max + cfg.tube_clamp)).maxCoeff() <= 1e-9);
      prev = p;
      // crude plant: semi-implicit euler at a fine step
      for (int i = 0; i < 50; ++i) {
        const auto terms = dynamics_terms(q, qd, chain, par);
        const Vec qdd = plant_accel(q, qd, p, terms);
        qd += (cfg.ts / 50) * qdd;
        q += (cfg.ts / 50) * qd;
      }
    }
  }

  SUBCASE("infeasible problem falls back to held input") {
    ArmGeometry g2 = geom;
    g2.gravity.setZero();
    DynamicsParams par2;
    par2.stiffness = 0.0;
    par2.damping = 0.0;
    auto cfg2 = MpcConfig::defaults(g2);
    cfg2.horizon = 2;
    cfg2.p_min = Vec::Constant(4, -0.01);
    cfg2.p_max = Vec::Constant(4, 0.01);
    cfg2.du_max = Vec::Constant(4, 0.005);
    TubeMpcController ctrl(g2, par2, cfg2);
    Mat ref(3, 3);
    for (int k = 0; k < 3; ++k) ref.col(k) = Eigen::Vector3d(0, 0, 0.29);
    MpcSolution sol;
    StepDiagnostics diag;
    // enormous velocity: terminal rest unreachable with the tiny inputs
    const Vec p = ctrl.step(Vec::Zero(4), Vec::Constant(4, 8.0), ref, &sol, &diag);
    CHECK(diag.fallback);
    CHECK(p.cwiseAbs().maxCoeff() <= 0.01 + 1e-12);
  }

  SUBCASE("deterministic across controller instances") {
    Mat ref(3, cfg.horizon + 1);
    for (int k = 0; k <= cfg.horizon; ++k) ref.col(k) = Eigen::Vector3d(0.06, 0.02, 0.27);
    TubeMpcController c1(geom, par, cfg), c2(geom, par, cfg);
    Vec q = Vec::Zero(4), qd = Vec::Zero(4);
    for (int step = 0; step < 3; ++step) {
      const Vec p1 = c1.step(q, qd, ref);
      const Vec p2 = c2.step(q, qd, ref);
      CHECK((p1 - p2).cwiseAbs().maxCoeff() == 0.0);
      q.array() += 0.01;
      qd.array() += 0.005;
    }
  }
}
