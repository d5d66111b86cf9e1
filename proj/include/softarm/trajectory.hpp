#pragma once

#include <functional>

#include "softarm/arm_model.hpp"

namespace softarm {

/// Time-parametrized cartesian reference with lookahead windows. Sampling
/// beyond the duration holds the final point.
class TrajectoryRef {
 public:
  TrajectoryRef() = default;
  TrajectoryRef(std::function<Eigen::Vector3d(double)> sampler, double duration)
      : sampler_(std::move(sampler)), duration_(duration) {}

  Eigen::Vector3d position(double t) const {
    return sampler_(std::clamp(t, 0.0, duration_));
  }

  /// n samples at t0, t0+dt, ..., as columns.
  Mat window(double t0, double dt, int n) const {
    Mat w(3, n);
    for (int i = 0; i < n; ++i) w.col(i) = position(t0 + i * dt);
    return w;
  }

  double duration() const { return duration_; }

 private:
  std::function<Eigen::Vector3d(double)> sampler_;
  double duration_ = 0.0;
};

/// Constant-height circle, phase zero on the +x axis, one turn per period.
TrajectoryRef make_circle(double radius, const Eigen::Vector3d& center, double period,
                          double turns);

/// Constant-speed square at fixed height; corners at exact multiples of
/// period/4, traversal repeats for `turns` periods.
TrajectoryRef make_square(double side, const Eigen::Vector2d& center, double height,
                          double period, double turns);

TrajectoryRef make_setpoint(const Eigen::Vector3d& point);

}  // namespace softarm
