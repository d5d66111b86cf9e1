#pragma once

#include "softarm/sim_log.hpp"

namespace softarm {

struct RunResult {
  SimLog log;
  Metrics metrics;
  bool aborted = false;
  std::string abort_reason;
};

/**
 * Fixed-step closed loop: observe, control, reconstruct chamber pressures,
 * advance the plant. Plant divergence aborts the run with the partial log
 * preserved. Deterministic for a fixed scenario and seed.
 */
RunResult run_scenario(const Scenario& scenario);

}  // namespace softarm
