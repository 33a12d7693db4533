#include "dampcert/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dampcert/errors.hpp"

namespace dampcert {

namespace {

constexpr double kNoiseFloor = 1e-8;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
  }
  if (syy > 0.0) {
    f.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  } else {
    f.r_squared = ss_res == 0.0 ? 1.0 : 0.0;
  }
  return f;
}

// Indices of samples above the noise floor inside the window (default:
// latter half of all such samples).
std::vector<std::size_t> select_window(const std::vector<double>& t,
                                       const std::vector<double>& norm,
                                       const std::optional<FitWindow>& window) {
  if (t.size() != norm.size()) {
    throw Error(ErrorCode::InvalidArgument, "times and norms differ in length");
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(norm[i] > kNoiseFloor) || !std::isfinite(norm[i])) continue;
    if (window && (t[i] < window->t_lo || t[i] > window->t_hi)) continue;
    idx.push_back(i);
  }
  if (!window) idx.erase(idx.begin(), idx.begin() + idx.size() / 2);
  if (idx.size() < 10) {
    throw Error(ErrorCode::InsufficientData,
                "need >= 10 samples above 1e-8 in the fit window, have " +
                    std::to_string(idx.size()));
  }
  return idx;
}

DecayEstimate log_fit(const std::vector<double>& t, const std::vector<double>& norm,
                      const std::optional<FitWindow>& window, DecayModel model) {
  const auto idx = select_window(t, norm, window);
  std::vector<double> x, y;
  for (std::size_t i : idx) {
    x.push_back(model == DecayModel::exponential ? t[i] : std::log1p(t[i]));
    y.push_back(std::log(norm[i]));
  }
  const LineFit f = least_squares(x, y);
  DecayEstimate est;
  est.model = model;
  est.rate = -f.slope;
  est.prefactor = std::exp(f.intercept);
  est.t_lo = t[idx.front()];
  est.t_hi = t[idx.back()];
  est.r_squared = f.r_squared;
  est.samples = idx.size();
  return est;
}

VerificationReport make_report(std::string name, double violation, double tol,
                               std::size_t samples) {
  return {std::move(name), violation, tol, violation <= tol, samples};
}

}  // namespace

std::string_view to_string(DecayModel model) {
  switch (model) {
    case DecayModel::exponential: return "exponential";
    case DecayModel::polynomial: return "polynomial";
    case DecayModel::linear_phase: return "linear_phase";
  }
  return "unknown";
}

DecayEstimate fit_exponential(const std::vector<double>& t,
                              const std::vector<double>& norm,
                              std::optional<FitWindow> window) {
  return log_fit(t, norm, window, DecayModel::exponential);
}

DecayEstimate fit_exponential(const Trajectory& traj, std::optional<FitWindow> window) {
  return fit_exponential(traj.times, traj.norm_H, window);
}

DecayEstimate fit_polynomial(const std::vector<double>& t,
                             const std::vector<double>& norm,
                             std::optional<FitWindow> window) {
  return log_fit(t, norm, window, DecayModel::polynomial);
}

DecayEstimate fit_polynomial(const Trajectory& traj, std::optional<FitWindow> window) {
  return fit_polynomial(traj.times, traj.norm_H, window);
}

VerificationReport verify_lyapunov_decrease(const std::vector<double>& t,
                                            const std::vector<double>& norm_H,
                                            const std::vector<double>& V, double C) {
  if (t.size() != norm_H.size() || t.size() != V.size()) {
    throw Error(ErrorCode::InvalidArgument, "trajectory columns differ in length");
  }
  if (t.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "need at least two samples");
  }
  double worst = -kInf;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double dt = t[k + 1] - t[k];
    const double v = (V[k + 1] - V[k]) / dt + C * norm_H[k] * norm_H[k];
    worst = std::max(worst, v);
  }
  return make_report("lyapunov_decrease", worst, 1e-4 * V[0], t.size() - 1);
}

VerificationReport verify_lyapunov_decrease(const Trajectory& traj,
                                            const LyapunovCertificate& cert) {
  if (!traj.V_values) {
    throw Error(ErrorCode::InvalidArgument, "trajectory carries no V values");
  }
  return verify_lyapunov_decrease(traj.times, traj.norm_H, *traj.V_values, cert.C);
}

std::pair<VerificationReport, VerificationReport> verify_poly_chain(
    const Matrix& A, const InnerProduct& H, const Matrix& P_theta, double C,
    const Vector& z0, std::vector<double> t_grid) {
  if (A.rows() != z0.size() || P_theta.rows() != z0.size() || H.dim() != z0.size()) {
    throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  }
  if (!(C > 0.0)) throw Error(ErrorCode::InvalidArgument, "C must be positive");
  if (t_grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty time grid");
  std::sort(t_grid.begin(), t_grid.end());
  if (t_grid.front() < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "time grid must be nonnegative");
  }
  constexpr double kTol = 1e-8;
  auto V = [&](const Vector& z) { return z.dot(P_theta * z); };

  // Panel quadrature of |e^{sA} z0|^2 from grid point to grid point, then
  // onward until the integrand is negligible; the remainder beyond uses the
  // decay rate fitted over the last panels.
  using Rule = boost::math::quadrature::gauss<double, 10>;
  const double anorm = std::max(A.cwiseAbs().colwise().sum().maxCoeff(), 1e-12);
  const double panel = std::min(0.25, 0.5 / anorm);

  std::vector<double> nodes_x, nodes_w;
  for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
    for (double sgn : {-1.0, 1.0}) {
      if (Rule::abscissa()[i] == 0.0 && sgn > 0.0) continue;
      nodes_x.push_back(0.5 * (1.0 + sgn * Rule::abscissa()[i]));
      nodes_w.push_back(0.5 * Rule::weights()[i]);
    }
  }
  struct Propagators {
    double width = -1.0;
    std::vector<Matrix> at_nodes;
    Matrix at_end;
  };
  Propagators prop;
  auto panel_integral = [&](const Vector& z, double width, Vector* end) {
    if (prop.width != width) {
      prop.width = width;
      prop.at_nodes.clear();
      for (double x : nodes_x) prop.at_nodes.push_back(matrix_exponential(A, x * width));
      prop.at_end = matrix_exponential(A, width);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes_x.size(); ++i) {
      const Vector zi = prop.at_nodes[i] * z;
      sum += nodes_w[i] * width * H.dot(zi, zi);
    }
    *end = prop.at_end * z;
    return sum;
  };

  Vector z = matrix_exponential(A, t_grid.front()) * z0;
  std::vector<Vector> at_grid{z};
  std::vector<double> segment;  // integral over [t_j, t_{j+1}]
  for (std::size_t j = 0; j + 1 < t_grid.size(); ++j) {
    const double len = t_grid[j + 1] - t_grid[j];
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / panel)));
    double acc = 0.0;
    for (int p = 0; p < pieces; ++p) acc += panel_integral(z, len / pieces, &z);
    segment.push_back(acc);
    at_grid.push_back(z);
  }

  // Continue past the last grid point.
  const double z0sq = std::max(H.dot(z0, z0), 1e-300);
  double beyond = 0.0;
  double remainder = 0.0;
  std::vector<double> log_norms, log_times;
  double s = t_grid.back();
  for (int p = 0; p < 20000; ++p) {
    const double nz = H.dot(z, z);
    if (nz <= 1e-24 * z0sq) break;
    log_times.push_back(s);
    log_norms.push_back(0.5 * std::log(nz));
    beyond += panel_integral(z, panel, &z);
    s += panel;
  }
  {
    const double nz = H.dot(z, z);
    if (nz > 0.0) {
      double mu = 0.0;
      if (log_times.size() >= 4) {
        const std::size_t k = std::min<std::size_t>(log_times.size(), 40);
        std::vector<double> lt(log_times.end() - k, log_times.end());
        std::vector<double> ln(log_norms.end() - k, log_norms.end());
        mu = -least_squares(lt, ln).slope;
      }
      remainder = mu > 0.0 ? nz / (2.0 * mu) : kInf;
    }
  }

  // tail[j] = int_{t_j}^inf
  std::vector<double> tail(t_grid.size());
  tail.back() = beyond + remainder;
  for (std::size_t j = t_grid.size() - 1; j-- > 0;) tail[j] = tail[j + 1] + segment[j];

  double worst_a = -kInf;
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    worst_a = std::max(worst_a, C * tail[j] - V(at_grid[j]));
  }

  double worst_b = -kInf;
  std::size_t count_b = 0;
  for (double t : t_grid) {
    if (t < 1.0) continue;
    const Vector zt = matrix_exponential(A, t) * z0;
    const Vector zh = matrix_exponential(A, 0.5 * t) * z0;
    worst_b = std::max(worst_b, (1.0 + t) * H.dot(zt, zt) - (4.0 / C) * V(zh));
    ++count_b;
  }
  if (count_b == 0) worst_b = 0.0;

  return {make_report("tail_integral", worst_a, kTol, t_grid.size()),
          make_report("decay_chain", worst_b, kTol, count_b)};
}

std::pair<VerificationReport, VerificationReport> verify_poly_chain(
    const SemiDiscreteSystem& system, const Matrix& P_theta, double C,
    const Vector& z0, std::vector<double> t_grid) {
  return verify_poly_chain(system.A(), system.H(), P_theta, C, z0, std::move(t_grid));
}

DecayEstimate fit_linear_phase(const Trajectory& traj, double C_sigma, double B_norm,
                               double tol) {
  if (!traj.t_star || *traj.t_star <= traj.times.front() || traj.norm_H.front() <= 1.0) {
    throw Error(ErrorCode::NoLinearPhase, "trajectory never leaves the unit ball");
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < traj.size() && traj.times[i] <= *traj.t_star; ++i) {
    x.push_back(traj.times[i]);
    y.push_back(traj.norm_H[i]);
  }
  if (x.size() < 3) {
    throw Error(ErrorCode::NoLinearPhase, "fewer than 3 samples before t*");
  }
  const LineFit f = least_squares(x, y);
  DecayEstimate est;
  est.model = DecayModel::linear_phase;
  est.rate = f.slope;
  est.prefactor = f.intercept;
  est.t_lo = x.front();
  est.t_hi = x.back();
  est.r_squared = f.r_squared;
  est.samples = x.size();
  est.slope_bound = -2.0 * C_sigma * B_norm - tol;
  est.within_bound = f.slope >= *est.slope_bound;
  return est;
}

Vector sweep_direction(const SemiDiscreteSystem& system, const DampingSpec& damping) {
  Eigen::EigenSolver<Matrix> es(system.closed_loop(damping.C1));
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "eigen decomposition failed");
  }
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < es.eigenvalues().size(); ++j) {
    if (std::abs(es.eigenvalues()(j)) < std::abs(es.eigenvalues()(best))) best = j;
  }
  Vector v = es.eigenvectors().col(best).real();
  if (v.norm() == 0.0) v = es.eigenvectors().col(best).imag();
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v(imax) < 0.0) v = -v;
  return v / system.norm_DA(v);
}

SweepResult sweep_semiglobal(const SemiDiscreteSystem& system,
                             const DampingSpec& damping,
                             const std::vector<double>& radii,
                             const IntegratorConfig& config) {
  if (radii.empty()) throw Error(ErrorCode::InvalidArgument, "no radii given");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1]))) {
      throw Error(ErrorCode::InvalidArgument, "radii must be positive and increasing");
    }
  }
  const Vector dir = sweep_direction(system, damping);
  IntegratorConfig cfg = config;
  cfg.store_states = false;
  SweepResult result;
  for (double r : radii) {
    const Trajectory traj = integrate(system, damping, r * dir, cfg);
    const DecayEstimate est = fit_exponential(traj);
    result.rows.push_back({r, est.rate, est.prefactor, est.r_squared});
  }
  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    if (result.rows[i].mu > 1.2 * result.rows[i - 1].mu) result.mu_nonincreasing = false;
  }
  return result;
}

ProfileFunctions::ProfileFunctions(HFunction h, double B_norm, double lambda_min)
    : h_(std::move(h)), b_(B_norm), lambda_(lambda_min) {
  if (!(lambda_ > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "lambda_min must be positive");
  }
}

double ProfileFunctions::psi(double X) const {
  return K_function(h_, b_, X) + lambda_ * X;
}

double ProfileFunctions::g(double y) const {
  if (!(y >= 0.0)) throw Error(ErrorCode::DomainError, "g needs y >= 0");
  if (y == 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (psi(hi) < y) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw Error(ErrorCode::Overflow, "g bracket overflow");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (psi(mid) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double ProfileFunctions::G(double x) const {
  if (!(x > 0.0)) throw Error(ErrorCode::DomainError, "G needs x > 0");
  if (x == 1.0) return 0.0;
  // v = e^u
  auto f = [this](double u) {
    const double v = std::exp(u);
    return v / g(v);
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  return GK::integrate(f, 0.0, std::log(x), 15, 1e-12);
}

BehaviorProfile behavior_profile(const Trajectory& traj, const LyapunovCertificate& cert) {
  if (cert.kind != CertificateKind::global_exp_SU && cert.kind != CertificateKind::finite_dim) {
    throw Error(ErrorCode::InvalidArgument, "behavior profile needs a global certificate");
  }
  if (!(cert.M > 0.0) || !(cert.alpha > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "behavior profile needs M > 0 and alpha > 0");
  }
  if (!traj.t_star) {
    throw Error(ErrorCode::NoLinearPhase, "trajectory never enters the unit ball");
  }
  if (traj.size() == 0 || (!traj.V_values && traj.states.empty())) {
    throw Error(ErrorCode::InvalidArgument, "trajectory needs V values or states");
  }
  const double V0 = traj.V_values ? traj.V_values->front() : eval_V(cert, traj.states.front());

  const ProfileFunctions fn(cert.damping.h, cert.B_norm, cert.alpha);
  BehaviorProfile prof;
  prof.t_star = *traj.t_star;

  // |P| X + M K <= c psi and lambda X + M K >= c' psi; with dV/dt <= -C X:
  // w = V / c satisfies G(w(t)) <= G(w0) - C t / c, and X <= g(V / c').
  const double c = std::max(cert.P_norm_H / cert.alpha, cert.M);
  const double c_low = std::min(1.0, cert.M);
  prof.C3 = c / c_low;
  prof.C4 = c / cert.C;
  const double w0 = V0 / c;
  const double G0 = fn.G(w0);

  // Tabulate G on a log grid below w0 so G^{-1} is an interpolation.
  const double G_min = G0 - prof.t_star / prof.C4;
  std::vector<double> us{std::log(w0)}, Gs{G0};
  {
    using Rule = boost::math::quadrature::gauss<double, 5>;
    const double du = 0.01;
    while (Gs.back() > G_min && us.back() > std::log(w0) - 700.0) {
      const double u1 = us.back(), u0 = u1 - du;
      double integral = 0.0;
      for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
        for (double sgn : {-1.0, 1.0}) {
          if (Rule::abscissa()[i] == 0.0 && sgn > 0.0) continue;
          const double u = 0.5 * (u0 + u1) + 0.5 * du * sgn * Rule::abscissa()[i];
          const double v = std::exp(u);
          integral += 0.5 * du * Rule::weights()[i] * v / fn.g(v);
        }
      }
      us.push_back(u0);
      Gs.push_back(Gs.back() - integral);
    }
  }
  auto G_inverse = [&](double y) {
    if (y >= Gs.front()) return std::exp(us.front());
    for (std::size_t i = 1; i < Gs.size(); ++i) {
      if (Gs[i] <= y) {
        const double f = (y - Gs[i]) / (Gs[i - 1] - Gs[i]);
        return std::exp(us[i] + f * (us[i - 1] - us[i]));
      }
    }
    return std::exp(us.back());
  };

  const double h_top = [&] {
    try {
      return std::max(cert.damping.h(0.0), cert.damping.h(cert.B_norm));
    } catch (const Error&) {
      return kInf;
    }
  }();
  const double bound_unit = cert.P_norm_H + cert.M * h_top;
  const double C_V = 1.0 / bound_unit;
  prof.post_prefactor = std::sqrt(bound_unit / cert.alpha);
  prof.post_rate = 0.5 * cert.C * C_V;
  const double z_star = prof.t_star > traj.times.front() ? 1.0 : traj.norm_H.front();

  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    double env;
    if (t <= prof.t_star) {
      const double w = G_inverse(G0 - t / prof.C4);
      env = std::sqrt(fn.g(prof.C3 * w));
      prof.pre_ratio = std::max(prof.pre_ratio, traj.norm_H[k] / env);
    } else {
      env = prof.post_prefactor * std::exp(-prof.post_rate * (t - prof.t_star)) * z_star;
      prof.post_ratio = std::max(prof.post_ratio, traj.norm_H[k] / env);
    }
    prof.times.push_back(t);
    prof.envelope.push_back(env);
  }
  return prof;
}

}  // namespace dampcert
