#include "dampcert/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dampcert/errors.hpp"
#include "dampcert/io.hpp"

namespace dampcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool close(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

double h_or_inf(const HFunction& h, double x) {
  try {
    return h(x);
  } catch (const Error&) {
    return kInf;
  }
}

// Range of h over [0, x]: endpoints plus any table knots inside.
std::pair<double, double> h_range(const HFunction& h, double x) {
  double lo = std::min(h_or_inf(h, 0.0), h_or_inf(h, x));
  double hi = std::max(h_or_inf(h, 0.0), h_or_inf(h, x));
  if (h.form() == HFunction::Form::table) {
    for (const auto& [kx, ky] : h.knots()) {
      if (kx > x) break;
      lo = std::min(lo, ky);
      hi = std::max(hi, ky);
    }
  }
  return {lo, hi};
}

double h_at_radius(const DampingSpec& damping, double x) {
  const double v = h_or_inf(damping.h, x);
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::DomainError, "h is not finite at ||B^*|| r");
  }
  return v;
}

struct Base {
  Matrix Atilde;
  Matrix P;
  double P_norm_H = 0.0;
  double lambda_min = 0.0;
  double B_norm = 0.0;
};

Base lyapunov_base(const SemiDiscreteSystem& system, const DampingSpec& damping) {
  validate(damping);
  Base b;
  b.Atilde = system.closed_loop(damping.C1);
  // Gram form: At^T Pi + Pi At = -W gives <At z, Pz>_H + <Pz, At z>_H = -||z||_H^2.
  b.P = solve_lyapunov(b.Atilde, system.H().weight());
  const FormBounds fb = form_bounds(b.P, system.H());
  b.P_norm_H = fb.lambda_max;
  b.lambda_min = fb.lambda_min;
  b.B_norm = std::sqrt(system.k()) * system.B_adjoint_norm();
  return b;
}

LyapunovCertificate global_certificate(const SemiDiscreteSystem& system,
                                       const DampingSpec& damping,
                                       CertificateKind kind) {
  if (system.S_choice() != NormChoice::U_euclidean) {
    throw Error(ErrorCode::WrongNormChoice,
                "global certificate requires the U-norm choice (S = U)");
  }
  const Base b = lyapunov_base(system, damping);
  LyapunovCertificate cert;
  cert.kind = kind;
  cert.P = b.P;
  cert.H_weight = system.H().weight();
  cert.C = 1.0;
  cert.alpha = b.lambda_min;
  cert.B_norm = b.B_norm;
  cert.P_norm_H = b.P_norm_H;
  cert.M = damping.C2 * b.B_norm * b.P_norm_H;
  cert.damping = damping;
  cert.k = system.k();
  if (damping.h.singular_at_zero()) cert.flags.push_back("h_singular_at_zero");
  return cert;
}

double norm_H2(const LyapunovCertificate& cert, const Vector& z) {
  if (cert.H_weight.size() == 0) return z.squaredNorm();
  return z.dot(cert.H_weight * z);
}

void put(std::ostringstream& os, std::string_view key, double v) {
  os << key << " = " << format_double(v) << '\n';
}

void put(std::ostringstream& os, std::string_view key, const std::optional<double>& v) {
  os << key << " = " << (v ? format_double(*v) : std::string("none")) << '\n';
}

}  // namespace

std::string_view to_string(CertificateKind kind) {
  switch (kind) {
    case CertificateKind::global_exp_SU: return "global_exp_SU";
    case CertificateKind::semiglobal_exp_SneqU: return "semiglobal_exp_SneqU";
    case CertificateKind::semiglobal_poly: return "semiglobal_poly";
    case CertificateKind::finite_dim: return "finite_dim";
  }
  return "unknown";
}

std::optional<CertificateKind> parse_certificate_kind(std::string_view name) {
  for (CertificateKind k :
       {CertificateKind::global_exp_SU, CertificateKind::semiglobal_exp_SneqU,
        CertificateKind::semiglobal_poly, CertificateKind::finite_dim}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

void LyapunovCertificate::check_invariants() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::InvalidArgument, "certificate invariant violated: " + what);
  };
  if (!(C > 0.0)) fail("C > 0");
  if (M < 0.0) fail("M >= 0");
  switch (kind) {
    case CertificateKind::global_exp_SU:
    case CertificateKind::finite_dim:
      if (!close(M, damping.C2 * B_norm * P_norm_H)) fail("M = C2 |B^*| |P|");
      break;
    case CertificateKind::semiglobal_exp_SneqU: {
      if (!r || !c_S || !P_norm_DA || !mu) fail("semiglobal fields present");
      const double cs = std::sqrt(k) * *c_S;
      const double expected =
          cs * damping.C2 * damping.h(B_norm * *r) * *r * *P_norm_DA;
      if (!close(M, expected)) fail("M = c_S C2 h(|B^*| r) r |P|_DA");
      const double mu_expected =
          M > 0.0 ? std::min(C / (2.0 * P_norm_H), C / (2.0 * M)) : C / (2.0 * P_norm_H);
      if (!close(*mu, mu_expected)) fail("mu = min(C/2|P|, C/2M)");
      break;
    }
    case CertificateKind::semiglobal_poly: {
      if (!r || !C_theta) fail("poly fields present");
      const double expected =
          damping.C2 * *C_theta * damping.h(B_norm * *r) * B_norm * *r;
      if (!close(M, expected)) fail("M = C2 C_theta h(|B^*| r) |B^*| r");
      break;
    }
  }
}

double K_function(const HFunction& h, double b, double X) {
  if (!(X >= 0.0)) throw Error(ErrorCode::DomainError, "K needs X >= 0");
  if (X == 0.0) return 0.0;
  switch (h.form()) {
    case HFunction::Form::constant:
      return h.value() * (2.0 / 3.0) * std::pow(X, 1.5);
    case HFunction::Form::power: {
      // int_0^X v^{1/2} (b v^{1/2})^p dv
      const double p = h.exponent();
      const double e = (3.0 + p) / 2.0;
      if (!(e > 0.0)) {
        throw Error(ErrorCode::DomainError, "K diverges for h exponent <= -3");
      }
      if (b == 0.0) {
        if (p < 0.0) return kInf;
        if (p > 0.0) return 0.0;
      }
      return std::pow(b, p) * std::pow(X, e) / e;
    }
    case HFunction::Form::table: {
      // v = u^2: K = int_0^sqrt(X) 2 u^2 h(b u) du, integrated between the
      // kinks of the piecewise-linear h.
      using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
      const double umax = std::sqrt(X);
      std::vector<double> breaks{0.0};
      if (b > 0.0) {
        for (const auto& [kx, ky] : h.knots()) {
          const double u = kx / b;
          if (u > 0.0 && u < umax) breaks.push_back(u);
        }
      }
      breaks.push_back(umax);
      auto f = [&](double u) { return 2.0 * u * u * h(b * u); };
      double total = 0.0;
      for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        total += GK::integrate(f, breaks[i], breaks[i + 1], 10, 1e-12);
      }
      return total;
    }
  }
  return 0.0;
}

LyapunovCertificate build_exp_certificate(const SemiDiscreteSystem& system,
                                          const DampingSpec& damping) {
  return global_certificate(system, damping, CertificateKind::global_exp_SU);
}

LyapunovCertificate build_finite_dim_certificate(const SemiDiscreteSystem& system,
                                                 const DampingSpec& damping) {
  if (!system.H().is_identity() || !system.U().is_identity()) {
    throw Error(ErrorCode::InvalidArgument,
                "finite-dimensional certificate needs Euclidean H and U");
  }
  return global_certificate(system, damping, CertificateKind::finite_dim);
}

LyapunovCertificate build_semiglobal_certificate(const SemiDiscreteSystem& system,
                                                 const DampingSpec& damping,
                                                 double r, std::optional<double> c_S) {
  if (!c_S || !std::isfinite(*c_S) || *c_S < 0.0) {
    throw Error(ErrorCode::MissingCS, "semiglobal certificate needs c_S");
  }
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw Error(ErrorCode::InvalidArgument, "validity radius r must be positive");
  }
  if (!damping.componentwise() || system.S_choice() != NormChoice::S_sup) {
    throw Error(ErrorCode::WrongNormChoice,
                "semiglobal certificate needs componentwise damping and S = sup");
  }
  const Base b = lyapunov_base(system, damping);

  // ||P||_{L(D(A))} <= sqrt(2) ||P||_G with G the Hilbert graph norm
  // W + A^T W A, since ||z||_G <= ||z||_{D(A)} <= sqrt(2) ||z||_G.
  const Matrix& W = system.H().weight();
  const Matrix& A = system.A();
  const InnerProduct G(W + A.transpose() * W * A);
  const Matrix P_op = system.H().weight().llt().solve(b.P);
  const double P_norm_DA = std::sqrt(2.0) * operator_norm(P_op, G, G);

  LyapunovCertificate cert;
  cert.kind = CertificateKind::semiglobal_exp_SneqU;
  cert.P = b.P;
  cert.H_weight = W;
  cert.C = 1.0;
  cert.alpha = b.lambda_min;
  cert.B_norm = b.B_norm;
  cert.P_norm_H = b.P_norm_H;
  cert.P_norm_DA = P_norm_DA;
  cert.r = r;
  cert.c_S = *c_S;
  cert.damping = damping;
  cert.k = system.k();
  const double cs = std::sqrt(system.k()) * *c_S;
  cert.M = cs * damping.C2 * h_at_radius(damping, b.B_norm * r) * r * P_norm_DA;
  cert.mu = cert.M > 0.0 ? std::min(cert.C / (2.0 * cert.P_norm_H), cert.C / (2.0 * cert.M))
                         : cert.C / (2.0 * cert.P_norm_H);
  cert.flags.push_back("P_norm_DA_is_graph_norm_bound");
  return cert;
}

double est_pol_ratio(const SemiDiscreteSystem& system, const Matrix& Atilde,
                     const Matrix& P1, double gamma, const ProbeSettings& probes) {
  if (!(probes.t_step > 0.0) || !(probes.t_max >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "probe time grid invalid");
  }
  const Eigen::Index n = system.dim();
  std::vector<Vector> zs;
  Eigen::EigenSolver<Matrix> es(Atilde);
  if (es.info() == Eigen::Success) {
    for (Eigen::Index j = 0; j < n; ++j) {
      zs.push_back(es.eigenvectors().col(j).real());
      zs.push_back(es.eigenvectors().col(j).imag());
    }
  }
  std::mt19937_64 rng(probes.seed);
  std::normal_distribution<double> normal;
  for (int i = 0; i < probes.random_probes; ++i) {
    Vector z(n);
    for (Eigen::Index j = 0; j < n; ++j) z(j) = normal(rng);
    zs.push_back(z);
  }

  const Matrix E = matrix_exponential(Atilde, probes.t_step);
  const int steps = static_cast<int>(std::ceil(probes.t_max / probes.t_step));
  double worst = 0.0;
  for (const Vector& z0 : zs) {
    const double da = system.norm_DA(z0);
    if (!(da > 1e-300)) continue;
    Vector z = z0 / da;
    for (int s = 0; s <= steps; ++s) {
      const double t = s * probes.t_step;
      const double v = z.dot(P1 * z);
      worst = std::max(worst, v * std::pow(1.0 + t, 2.0 * gamma - 1.0));
      z = E * z;
    }
  }
  return worst;
}

namespace {

struct PolyBase {
  Matrix Atilde;
  Matrix P1;
  double P_norm_H = 0.0;
  double lambda_min = 0.0;
};

PolyBase poly_base(const SemiDiscreteSystem& system, const DampingSpec& damping,
                   double gramian_shift) {
  if (system.S_choice() != NormChoice::U_euclidean) {
    throw Error(ErrorCode::WrongNormChoice,
                "polynomial certificate requires the U-norm choice (S = U)");
  }
  validate(damping);
  PolyBase b;
  b.Atilde = system.closed_loop(damping.C1);
  b.P1 = gramian_quadrature(b.Atilde, gramian_shift, 1e-12, system.H());
  const FormBounds fb = form_bounds(b.P1, system.H());
  b.P_norm_H = fb.lambda_max;
  b.lambda_min = fb.lambda_min;
  return b;
}

}  // namespace

double calibrate_C_theta(const SemiDiscreteSystem& system, const DampingSpec& damping,
                         double gamma, double gramian_shift,
                         const ProbeSettings& probes) {
  const PolyBase b = poly_base(system, damping, gramian_shift);
  return std::max(b.P_norm_H, est_pol_ratio(system, b.Atilde, b.P1, gamma, probes));
}

LyapunovCertificate build_poly_certificate(const SemiDiscreteSystem& system,
                                           const DampingSpec& damping, double r,
                                           double gamma, double C_theta,
                                           double gramian_shift,
                                           const ProbeSettings& probes) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw Error(ErrorCode::InvalidArgument, "validity radius r must be positive");
  }
  if (!(gamma > 0.0) || !(C_theta > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "gamma and C_theta must be positive");
  }
  const PolyBase b = poly_base(system, damping, gramian_shift);
  if (C_theta < b.P_norm_H) {
    throw Error(ErrorCode::CalibrationFailed,
                "C_theta below ||P1||_H = " + format_double(b.P_norm_H));
  }
  const double ratio = est_pol_ratio(system, b.Atilde, b.P1, gamma, probes);
  if (ratio > C_theta) {
    throw Error(ErrorCode::CalibrationFailed,
                "decay estimate needs C_theta >= " + format_double(ratio));
  }

  LyapunovCertificate cert;
  cert.kind = CertificateKind::semiglobal_poly;
  cert.P = b.P1;
  cert.H_weight = system.H().weight();
  cert.C = 1.0;
  cert.alpha = b.lambda_min;
  cert.B_norm = std::sqrt(system.k()) * system.B_adjoint_norm();
  cert.P_norm_H = b.P_norm_H;
  cert.r = r;
  cert.gamma = gamma;
  cert.C_theta = C_theta;
  cert.gramian_shift = gramian_shift;
  cert.damping = damping;
  cert.k = system.k();
  cert.M = damping.C2 * C_theta * h_at_radius(damping, cert.B_norm * r) * cert.B_norm * r;
  if (gamma <= 0.5) cert.flags.push_back("gamma_at_most_half");
  return cert;
}

double eval_V(const LyapunovCertificate& cert, const Vector& z) {
  if (z.size() != cert.P.rows()) {
    throw Error(ErrorCode::InvalidArgument, "state dimension mismatch");
  }
  const double quad = z.dot(cert.P * z);
  const double X = norm_H2(cert, z);
  switch (cert.kind) {
    case CertificateKind::global_exp_SU:
    case CertificateKind::finite_dim:
      return quad + (cert.M > 0.0 ? cert.M * K_function(cert.damping.h, cert.B_norm, X) : 0.0);
    default:
      return quad + cert.M * X;
  }
}

std::pair<double, double> sandwich_bounds(const LyapunovCertificate& cert,
                                          const Vector& z) {
  const double X = norm_H2(cert, z);
  const double nz = std::sqrt(X);
  if (nz == 0.0) return {0.0, 0.0};
  switch (cert.kind) {
    case CertificateKind::global_exp_SU:
    case CertificateKind::finite_dim: {
      const auto [hmin, hmax] = h_range(cert.damping.h, cert.B_norm * nz);
      const double lower = cert.alpha * X + cert.M * (2.0 / 3.0) * hmin * X * nz;
      double upper;
      if (std::isfinite(hmax)) {
        upper = cert.P_norm_H * X + cert.M * X * nz * hmax;
      } else {
        upper = cert.P_norm_H * X + cert.M * K_function(cert.damping.h, cert.B_norm, X);
      }
      return {lower, upper};
    }
    case CertificateKind::semiglobal_exp_SneqU:
      return {(cert.alpha + cert.M) * X, (cert.P_norm_H + cert.M) * X};
    case CertificateKind::semiglobal_poly: {
      // Upper bound uses C_theta >= ||P1||_H and ||z||_H <= ||z||_{D(A)};
      // the lower bound can only use the H norm.
      const double ct = cert.C_theta.value_or(cert.P_norm_H);
      return {(cert.alpha + cert.M) * X, (cert.M + ct) * X};
    }
  }
  return {0.0, 0.0};
}

Matrix certificate_closed_loop(const SemiDiscreteSystem& system,
                               const LyapunovCertificate& cert) {
  return system.closed_loop(cert.damping.C1);
}

std::string render_certificate(const LyapunovCertificate& cert) {
  std::ostringstream os;
  os << "kind = " << to_string(cert.kind) << '\n';
  put(os, "C", cert.C);
  put(os, "alpha", cert.alpha);
  put(os, "M", cert.M);
  put(os, "mu", cert.mu);
  put(os, "r", cert.r);
  put(os, "c_S", cert.c_S);
  put(os, "gamma", cert.gamma);
  put(os, "C_theta", cert.C_theta);
  put(os, "gramian_shift", cert.gramian_shift);
  put(os, "k", cert.k);
  put(os, "B_norm", cert.B_norm);
  put(os, "P_norm_H", cert.P_norm_H);
  put(os, "P_norm_DA", cert.P_norm_DA);
  os << "damping_kind = " << to_string(cert.damping.kind) << '\n';
  put(os, "damping_level", cert.damping.level);
  put(os, "damping_gain", cert.damping.gain);
  put(os, "damping_exponent", cert.damping.exponent);
  put(os, "C1", cert.damping.C1);
  put(os, "C2", cert.damping.C2);
  os << "dim = " << cert.P.rows() << '\n';
  os << "flags =";
  for (const auto& f : cert.flags) os << ' ' << f;
  os << '\n';
  return os.str();
}

LyapunovCertificate parse_certificate(std::string_view text) {
  LyapunovCertificate cert;
  auto opt = [](std::string_view v, std::string_view key) -> std::optional<double> {
    if (v == "none") return std::nullopt;
    return parse_double(v, key);
  };
  bool have_kind = false;
  DampingKind dkind = DampingKind::linear;
  double level = 1.0, gain = 1.0, q = 0.5;
  std::optional<double> C1, C2;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ParseError, "certificate: expected key = value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view val = trim(line.substr(eq + 1));
    if (key == "kind") {
      const auto k = parse_certificate_kind(val);
      if (!k) throw Error(ErrorCode::ParseError, "certificate: unknown kind");
      cert.kind = *k;
      have_kind = true;
    } else if (key == "C") cert.C = parse_double(val, key);
    else if (key == "alpha") cert.alpha = parse_double(val, key);
    else if (key == "M") cert.M = parse_double(val, key);
    else if (key == "mu") cert.mu = opt(val, key);
    else if (key == "r") cert.r = opt(val, key);
    else if (key == "c_S") cert.c_S = opt(val, key);
    else if (key == "gamma") cert.gamma = opt(val, key);
    else if (key == "C_theta") cert.C_theta = opt(val, key);
    else if (key == "gramian_shift") cert.gramian_shift = opt(val, key);
    else if (key == "k") cert.k = parse_double(val, key);
    else if (key == "B_norm") cert.B_norm = parse_double(val, key);
    else if (key == "P_norm_H") cert.P_norm_H = parse_double(val, key);
    else if (key == "P_norm_DA") cert.P_norm_DA = opt(val, key);
    else if (key == "damping_kind") {
      const auto k = parse_damping_kind(val);
      if (!k) throw Error(ErrorCode::ParseError, "certificate: unknown damping kind");
      dkind = *k;
    } else if (key == "damping_level") level = parse_double(val, key);
    else if (key == "damping_gain") gain = parse_double(val, key);
    else if (key == "damping_exponent") q = parse_double(val, key);
    else if (key == "C1") C1 = parse_double(val, key);
    else if (key == "C2") C2 = parse_double(val, key);
    else if (key == "flags") {
      for (auto& f : split(val, ' ')) {
        if (!f.empty()) cert.flags.push_back(f);
      }
    }
  }
  if (!have_kind) throw Error(ErrorCode::ParseError, "certificate: missing kind");
  cert.damping = DampingSpec::make(dkind, level, gain, q);
  if (C1) cert.damping.C1 = *C1;
  if (C2) cert.damping.C2 = *C2;
  return cert;
}

}  // namespace dampcert
