#pragma once

#include <stdexcept>
#include <string>

namespace softarm {

struct NonFiniteInput : std::runtime_error {
  explicit NonFiniteInput(const std::string& what) : std::runtime_error(what) {}
};

struct NegativePressure : std::runtime_error {
  explicit NegativePressure(const std::string& what) : std::runtime_error(what) {}
};

struct SingularInertia : std::runtime_error {
  explicit SingularInertia(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidGeometry : std::runtime_error {
  explicit InvalidGeometry(const std::string& what) : std::runtime_error(what) {}
};

struct RefTooShort : std::runtime_error {
  explicit RefTooShort(const std::string& what) : std::runtime_error(what) {}
};

struct NoFeasibleBox : std::runtime_error {
  explicit NoFeasibleBox(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

struct SimulationDiverged : std::runtime_error {
  explicit SimulationDiverged(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace softarm
