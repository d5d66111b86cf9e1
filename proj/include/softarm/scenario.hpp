#pragma once

#include <optional>
#include <string>

#include "softarm/constraint_finder.hpp"
#include "softarm/mpc.hpp"
#include "softarm/plant.hpp"
#include "softarm/quasi_static.hpp"
#include "softarm/trajectory.hpp"

namespace softarm {

enum class ControllerType { RobustMpc, PenalizedMpc, SoftMpc, QuasiStatic };

std::string to_string(ControllerType t);
ControllerType controller_type_from_string(const std::string& s);

struct TrajectorySpec {
  enum class Kind { Circle, Square, Setpoint };
  Kind kind = Kind::Setpoint;
  double radius = 0.1;
  Eigen::Vector3d center = Eigen::Vector3d(0, 0, 0.25);
  double period = 12.5;
  double turns = 2.0;
  double side = 0.26;
  double height = 0.25;
  Eigen::Vector3d point = Eigen::Vector3d(0, 0, 0.29);
};

TrajectoryRef make_trajectory(const TrajectorySpec& spec);

/// Declarative experiment description; everything a run needs.
struct Scenario {
  std::string name = "scenario";
  ArmGeometry geometry;
  DynamicsParams dynamics;
  ControllerType controller = ControllerType::RobustMpc;
  MpcConfig mpc;  // fully expanded, soft/penalty baked in when selected
  QuasiStaticConfig quasi_static;
  std::vector<Obstacle> obstacles;  // clearance metrics + penalty method
  TrajectorySpec trajectory;
  PlantOptions plant;
  double duration = 25.0;
  double rate_hz = 15.0;
  std::uint64_t seed = 1;
  double transient_exclusion = 1.0;  // seconds excluded from the RMSE
  bool log_timing = true;            // false zeroes solve_ms for byte-equal logs

  double ts() const { return 1.0 / rate_hz; }
  void validate() const;
};

/// Offline box-search description (the `find-box` input file).
struct FinderFile {
  ArmGeometry geometry;
  FinderConfig finder;
};

Scenario load_scenario(const std::string& path);
FinderFile load_finder_file(const std::string& path);

/// Schema check of either file kind. Returns the parsed kind name; throws
/// ConfigError with a precise location on any problem.
std::string validate_config_file(const std::string& path);

/// Patch a copy of the JSON at `file` with dotted-path overrides
/// ("controller.weights.q=2e4") and load it as a scenario.
Scenario load_scenario_with_overrides(const std::string& path,
                                      const std::vector<std::string>& overrides);

/// Serialized box snippet emitted by the offline search.
void write_box_file(const ConstraintBox& box, bool standard, const std::string& path);

}  // namespace softarm
