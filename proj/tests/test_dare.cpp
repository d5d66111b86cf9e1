#include <doctest.h>

#include <cmath>

#include "softarm/dare.hpp"
#include "softarm/rng.hpp"

using namespace softarm;

TEST_CASE("no dynamics") {
  const Mat a = Mat::Zero(3, 3);
  const Mat b = Mat::Identity(3, 3);
  const Mat q = Mat::Identity(3, 3) * 2.0;
  const Mat r = Mat::Identity(3, 3);
  const auto res = solve_dare(a, b, q, r);
  CHECK(res.converged);
  CHECK((res.P - q).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(res.K.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("scalar golden ratio") {
  const Mat one = Mat::Ones(1, 1);
  const auto res = solve_dare(one, one, one, one);
  CHECK(res.converged);
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  CHECK(std::abs(res.P(0, 0) - phi) < 1e-10);
  CHECK(res.spectral_radius < 1.0);
  CHECK(res.residual < 1e-10);
}

TEST_CASE("random stabilizable systems") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4;
    const int m = 2;
    Mat a(n, n), b(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) b(i, j) = rng.uniform(-1.0, 1.0);
    const Mat q = Mat::Identity(n, n);
    const Mat r = 0.5 * Mat::Identity(m, m);
    const auto res = solve_dare(a, b, q, r, 1e-8);
    CHECK(res.converged);
    CHECK(res.residual <= 1e-8);
    CHECK(res.spectral_radius < 1.0);
    CHECK((res.P - res.P.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    Eigen::SelfAdjointEigenSolver<Mat> es(res.P);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("unstabilizable pair is flagged") {
  Mat a = 2.0 * Mat::Identity(2, 2);
  Mat b = Mat::Zero(2, 1);
  const auto res = solve_dare(a, b, Mat::Identity(2, 2), Mat::Identity(1, 1));
  CHECK_FALSE(res.converged);
}
