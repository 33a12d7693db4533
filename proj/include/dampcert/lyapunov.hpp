#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dampcert/damping.hpp"
#include "dampcert/linalg.hpp"
#include "dampcert/models.hpp"

namespace dampcert {

enum class CertificateKind {
  global_exp_SU,
  semiglobal_exp_SneqU,
  semiglobal_poly,
  finite_dim,
};

std::string_view to_string(CertificateKind kind);
std::optional<CertificateKind> parse_certificate_kind(std::string_view name);

/// Certificate data. P is stored in Gram form with respect to the state
/// inner product, so <P z, z>_H = z^T P z; H_weight is that inner product.
///
/// All norms involving B refer to the effective input sqrt(k) B, and the
/// closed loop is Atilde = A - C1 k B B^*.
struct LyapunovCertificate {
  CertificateKind kind = CertificateKind::global_exp_SU;
  Matrix P;
  Matrix H_weight;
  double C = 1.0;
  /// Coercivity: smallest eigenvalue of P in the H geometry.
  double alpha = 0.0;
  double M = 0.0;
  std::optional<double> mu;
  std::optional<double> r;
  /// Embedding constant of B^* (without the sqrt(k) factor).
  std::optional<double> c_S;
  std::optional<double> gamma;
  std::optional<double> C_theta;
  /// Shift added to the Gramian for the polynomial certificate.
  std::optional<double> gramian_shift;
  DampingSpec damping;
  double k = 1.0;
  double B_norm = 0.0;    // ||sqrt(k) B^*||_{L(H,U)}
  double P_norm_H = 0.0;  // ||P||_{L(H)}
  /// Upper bound on ||P||_{L(D(A))} (semiglobal kind only).
  std::optional<double> P_norm_DA;
  std::vector<std::string> flags;

  /// Recomputes M (and mu) from the stored fields; throws InvalidArgument
  /// on mismatch beyond 1e-12 relative.
  void check_invariants() const;
};

/// K(X) = int_0^X sqrt(v) h(b sqrt(v)) dv. Closed form for constant and
/// power h, adaptive Gauss-Kronrod (1e-10 relative) for tables.
double K_function(const HFunction& h, double b, double X);

LyapunovCertificate build_exp_certificate(const SemiDiscreteSystem& system,
                                          const DampingSpec& damping);

/// Same construction on a Euclidean system (H = U = R^n, R^m).
LyapunovCertificate build_finite_dim_certificate(const SemiDiscreteSystem& system,
                                                 const DampingSpec& damping);

/// Validity radius r bounds ||z0||_{D(A)}. Throws MissingCS when c_S is absent.
LyapunovCertificate build_semiglobal_certificate(const SemiDiscreteSystem& system,
                                                 const DampingSpec& damping,
                                                 double r, std::optional<double> c_S);

struct ProbeSettings {
  double t_max = 100.0;
  double t_step = 0.25;
  int random_probes = 16;
  std::uint64_t seed = 7;
};

/// max over probes z and grid times t of
/// (1+t)^{2 gamma - 1} <e^{t At} z, P1 e^{t At} z>_H / ||z||^2_{D(A)}.
double est_pol_ratio(const SemiDiscreteSystem& system, const Matrix& Atilde,
                     const Matrix& P1, double gamma,
                     const ProbeSettings& probes = {});

/// Smallest C_theta accepted by build_poly_certificate for this probe set.
double calibrate_C_theta(const SemiDiscreteSystem& system, const DampingSpec& damping,
                         double gamma, double gramian_shift = 0.1,
                         const ProbeSettings& probes = {});

/// Throws CalibrationFailed unless C_theta >= ||P1||_H and the probe check
/// holds. gamma <= 1/2 is recorded in `flags`, not rejected.
LyapunovCertificate build_poly_certificate(const SemiDiscreteSystem& system,
                                           const DampingSpec& damping, double r,
                                           double gamma, double C_theta,
                                           double gramian_shift = 0.1,
                                           const ProbeSettings& probes = {});

double eval_V(const LyapunovCertificate& cert, const Vector& z);

std::pair<double, double> sandwich_bounds(const LyapunovCertificate& cert,
                                          const Vector& z);

/// Closed-loop matrix the certificate was built for.
Matrix certificate_closed_loop(const SemiDiscreteSystem& system,
                               const LyapunovCertificate& cert);

/// `key = value` block with every scalar at round-trip precision. P is
/// exported separately in the matrix file format.
std::string render_certificate(const LyapunovCertificate& cert);
/// Inverse of render_certificate for the scalar fields (P left empty).
LyapunovCertificate parse_certificate(std::string_view text);

}  // namespace dampcert
