#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dampcert/damping.hpp"
#include "dampcert/lyapunov.hpp"
#include "dampcert/models.hpp"
#include "dampcert/sim.hpp"

namespace dampcert {

enum class DecayModel { exponential, polynomial, linear_phase };

std::string_view to_string(DecayModel model);

struct FitWindow {
  double t_lo = 0.0;
  double t_hi = 0.0;
};

struct DecayEstimate {
  DecayModel model = DecayModel::exponential;
  /// mu (exponential), gamma (polynomial) or the slope (linear phase).
  double rate = 0.0;
  double prefactor = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double r_squared = 0.0;
  std::size_t samples = 0;
  /// Linear phase only: lower slope bound and whether the slope respects it.
  std::optional<double> slope_bound;
  bool within_bound = true;
};

struct VerificationReport {
  std::string check;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::size_t samples = 0;
};

/// Log-linear least squares of norm vs t. Uses samples with norm > 1e-8;
/// default window is the latter half of them. Needs >= 10 such samples.
DecayEstimate fit_exponential(const std::vector<double>& t,
                              const std::vector<double>& norm,
                              std::optional<FitWindow> window = std::nullopt);
DecayEstimate fit_exponential(const Trajectory& traj,
                              std::optional<FitWindow> window = std::nullopt);

/// Least squares of log norm vs log(1 + t); rate is gamma.
DecayEstimate fit_polynomial(const std::vector<double>& t,
                             const std::vector<double>& norm,
                             std::optional<FitWindow> window = std::nullopt);
DecayEstimate fit_polynomial(const Trajectory& traj,
                             std::optional<FitWindow> window = std::nullopt);

/// max_k (V[k+1] - V[k]) / dt_k + C norm_H[k]^2 against tol = 1e-4 V[0].
VerificationReport verify_lyapunov_decrease(const std::vector<double>& t,
                                            const std::vector<double>& norm_H,
                                            const std::vector<double>& V, double C);
VerificationReport verify_lyapunov_decrease(const Trajectory& traj,
                                            const LyapunovCertificate& cert);

/// Checks on the linear flow e^{tA} z0:
///   first:  V(e^{tA} z0) >= C int_t^inf |e^{sA} z0|_H^2 ds on the grid,
///   second: (1+t) |e^{tA} z0|_H^2 <= (4/C) V(e^{tA/2} z0) for grid t >= 1,
/// with V(z) = z^T P_theta z. Margins below -1e-8 fail.
std::pair<VerificationReport, VerificationReport> verify_poly_chain(
    const Matrix& A, const InnerProduct& H, const Matrix& P_theta, double C,
    const Vector& z0, std::vector<double> t_grid);
std::pair<VerificationReport, VerificationReport> verify_poly_chain(
    const SemiDiscreteSystem& system, const Matrix& P_theta, double C,
    const Vector& z0, std::vector<double> t_grid);

/// Linear fit of norm_H on [0, t_star]; slope must be >= -2 C_sigma B_norm - tol.
/// Throws NoLinearPhase without t_star > 0 or with fewer than 3 samples.
DecayEstimate fit_linear_phase(const Trajectory& traj, double C_sigma, double B_norm,
                               double tol = 1e-6);

struct SweepRow {
  double r = 0.0;
  double mu = 0.0;
  double K = 0.0;
  double r_squared = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// mu(r_{i+1}) <= 1.2 mu(r_i) for all i.
  bool mu_nonincreasing = true;
};

/// Unit D(A)-norm direction used by the sweep: real part of the eigenvector
/// of A - C1 k B B^* whose eigenvalue has the smallest modulus.
Vector sweep_direction(const SemiDiscreteSystem& system, const DampingSpec& damping);

/// Integrates from r * sweep_direction for each radius and fits the tail.
SweepResult sweep_semiglobal(const SemiDiscreteSystem& system,
                             const DampingSpec& damping,
                             const std::vector<double>& radii,
                             const IntegratorConfig& config);

/// g: inverse of X -> K(X) + lambda X, and G(x) = int_1^x dv / g(v).
class ProfileFunctions {
 public:
  ProfileFunctions(HFunction h, double B_norm, double lambda_min);

  double psi(double X) const;
  /// Bisection to 1e-12 relative.
  double g(double y) const;
  double G(double x) const;

 private:
  HFunction h_;
  double b_;
  double lambda_;
};

struct BehaviorProfile {
  double t_star = 0.0;
  /// Envelope constants: |z(t)|^2 <= g(C3 G^{-1}(G(w0) - t / C4)) before t*.
  double C3 = 1.0;
  double C4 = 1.0;
  /// Post-t* envelope: |z(t)| <= post_prefactor e^{-post_rate (t - t*)} |z(t*)|.
  double post_prefactor = 0.0;
  double post_rate = 0.0;
  std::vector<double> times;
  std::vector<double> envelope;
  /// max observed / predicted on [0, t*] and on (t*, end].
  double pre_ratio = 0.0;
  double post_ratio = 0.0;
};

/// Two-phase description of a trajectory under a global certificate.
BehaviorProfile behavior_profile(const Trajectory& traj, const LyapunovCertificate& cert);

}  // namespace dampcert
