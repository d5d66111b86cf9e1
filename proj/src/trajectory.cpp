#include "softarm/trajectory.hpp"

#include <cmath>

namespace softarm {

TrajectoryRef make_circle(double radius, const Eigen::Vector3d& center, double period,
                          double turns) {
  if (!(radius > 0.0) || !(period > 0.0) || !(turns > 0.0))
    throw ConfigError("make_circle: radius, period and turns must be > 0");
  auto fn = [radius, center, period](double t) {
    const double a = 2.0 * M_PI * t / period;
    return Eigen::Vector3d(center(0) + radius * std::cos(a), center(1) + radius * std::sin(a),
                           center(2));
  };
  return TrajectoryRef(fn, turns * period);
}

TrajectoryRef make_square(double side, const Eigen::Vector2d& center, double height,
                          double period, double turns) {
  if (!(side > 0.0) || !(period > 0.0) || !(turns > 0.0))
    throw ConfigError("make_square: side, period and turns must be > 0");
  const double h = side / 2.0;
  const Eigen::Vector2d corners[4] = {
      {center(0) + h, center(1) + h},
      {center(0) - h, center(1) + h},
      {center(0) - h, center(1) - h},
      {center(0) + h, center(1) - h},
  };
  auto fn = [corners, height, period](double t) {
    const double edge_time = period / 4.0;
    double local = std::fmod(t, period);
    if (local < 0.0) local += period;
    const int edge = std::min(3, static_cast<int>(local / edge_time));
    const double frac = local / edge_time - edge;
    const Eigen::Vector2d p = corners[edge] + frac * (corners[(edge + 1) % 4] - corners[edge]);
    return Eigen::Vector3d(p(0), p(1), height);
  };
  return TrajectoryRef(fn, turns * period);
}

TrajectoryRef make_setpoint(const Eigen::Vector3d& point) {
  return TrajectoryRef([point](double) { return point; }, 0.0);
}

}  // namespace softarm
