#pragma once

#include <optional>
#include <vector>

#include "dampcert/damping.hpp"
#include "dampcert/linalg.hpp"
#include "dampcert/lyapunov.hpp"
#include "dampcert/models.hpp"

namespace dampcert {

struct IntegratorConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  /// Step halving on the Richardson estimate |full - two halves| / 3.
  bool error_control = true;
  /// Local error target, relative to max(1, ||z||_H).
  double target = 1e-6;
  int max_halvings = 12;
  /// Keep the state vectors (norms are always recorded).
  bool store_states = true;

  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<double> norm_H;
  std::vector<double> norm_DA;
  std::optional<std::vector<double>> V_values;
  /// <sigma(sqrt(k) B^* z), sqrt(k) B^* z>_U
  std::vector<double> damping_power;
  std::optional<double> t_star;

  std::size_t size() const { return times.size(); }
};

/// Integrates z' = A z - sqrt(k) B sigma(sqrt(k) B^* z) on the grid k dt.
///
/// Each step is the implicit midpoint rule: trapezoidal on A and exactly
/// norm-nonincreasing for dissipative A and monotone sigma. The stage
/// equation is solved by fixed-point iteration with a Newton fallback.
/// Throws StepRejectionLimit when halving cannot meet the target and
/// ContractionViolation if ||z||_H grows by more than 1e-10 relative.
Trajectory integrate(const SemiDiscreteSystem& system, const DampingSpec& damping,
                     const Vector& z0, const IntegratorConfig& config,
                     const LyapunovCertificate* cert = nullptr);

/// First time with norm_H <= 1, interpolated linearly in log-norm; 0 if the
/// trajectory starts inside the unit ball.
std::optional<double> detect_unit_ball_entry(const Trajectory& traj);

/// (I - eps A)^{-1} z0, a strong-solution initial state.
Vector smooth_initial_state(const SemiDiscreteSystem& system, const Vector& z0,
                            double eps = 1e-3);

}  // namespace dampcert
