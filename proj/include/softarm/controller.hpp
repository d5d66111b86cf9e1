#pragma once

#include "softarm/dare.hpp"
#include "softarm/mpc.hpp"
#include "softarm/rigid_dynamics.hpp"

namespace softarm {

/// p* = u0 + K (measured - nominal), clamped per channel to u0 +- clamp and
/// clipped to the pressure bounds. `clamped` reports a saturated channel.
Vec tube_feedback(const Vec& u0, const Mat& gain, const Vec& measured, const Vec& nominal,
                  const Vec& clamp, const Vec& p_min, const Vec& p_max, bool* clamped = nullptr);

struct ControllerState {
  Vec u_old;   // last applied pseudo-pressure
  Mat k_tube;  // current feedback gain
  bool has_prev = false;
  MpcSolution prev;  // warm start; prev.x.col(1) is the nominal for "now"
  Mat cached_ad;
  Mat cached_k;
  bool has_dare_cache = false;
};

struct StepDiagnostics {
  bool fallback = false;       // optimizer failed; shifted previous solution applied
  bool dare_fallback = false;  // DARE not converged; zero tube gain
  bool clamp_active = false;
  double solve_ms = 0.0;
  QpStatus qp_status = QpStatus::MaxIter;
  int sqp_iterations = 0;
  int qp_iterations = 0;
  std::string diagnostic;
};

/**
 * One controller instance owns its state; a step is measure -> relinearize ->
 * DARE gain -> optimize -> tube correction. Falls back to the previous
 * solution shifted by one step when the optimizer fails.
 */
class TubeMpcController {
 public:
  TubeMpcController(const ArmGeometry& geom, const DynamicsParams& params, const MpcConfig& cfg);

  /// ref: 3 x (N+1) lookahead window. Returns the applied pseudo-pressure.
  Vec step(const Vec& q, const Vec& qd, const Mat& ref, MpcSolution* solution = nullptr,
           StepDiagnostics* diag = nullptr);

  void reset();
  const ControllerState& state() const { return state_; }
  const MpcConfig& config() const { return cfg_; }

 private:
  MpcSolution shifted_previous() const;

  ArmGeometry geom_;
  DynamicsParams params_;
  MpcConfig cfg_;
  AugmentedChain chain_;
  ControllerState state_;
};

}  // namespace softarm
