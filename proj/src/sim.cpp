#include "dampcert/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/LU>

#include "dampcert/errors.hpp"

namespace dampcert {

namespace {

class Stepper {
 public:
  Stepper(const SemiDiscreteSystem& system, const DampingSpec& damping)
      : sys_(system),
        damping_(damping),
        Bs_(std::sqrt(system.k()) * system.B()),
        Bs_adj_(std::sqrt(system.k()) * system.B_adjoint()) {}

  Vector nonlinear(const Vector& z) const {
    return -Bs_ * apply(damping_, Bs_adj_ * z, sys_.U());
  }

  double damping_power(const Vector& z) const {
    const Vector s = Bs_adj_ * z;
    return sys_.U().dot(apply(damping_, s, sys_.U()), s);
  }

  // One implicit-midpoint step of size tau.
  Vector step(const Vector& z, double tau) {
    const auto& lu = factor(tau);
    const double h = 0.5 * tau;
    const Matrix& A = sys_.A();

    Vector m = z + h * (A * z + nonlinear(z));
    const double scale = std::max(1.0, sys_.norm_H(z));
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
      const Vector next = lu.solve(z + h * nonlinear(m));
      const double delta = sys_.norm_H(next - m);
      m = next;
      if (delta <= 1e-13 * scale) {
        converged = true;
        break;
      }
      if (!std::isfinite(delta)) break;
    }
    if (!converged) m = newton(z, tau, m);
    return 2.0 * m - z;
  }

 private:
  const Eigen::PartialPivLU<Matrix>& factor(double tau) {
    auto it = cache_.find(tau);
    if (it != cache_.end()) return it->second;
    if (cache_.size() > 64) cache_.clear();
    const Eigen::Index n = sys_.dim();
    Matrix M = Matrix::Identity(n, n) - 0.5 * tau * sys_.A();
    return cache_.emplace(tau, Eigen::PartialPivLU<Matrix>(M)).first->second;
  }

  // Newton with Armijo backtracking on the residual norm; the Jacobian can be
  // nearly singular where sigma has an infinite derivative, and plain full
  // steps then oscillate around the root with little decrease.
  Vector newton(const Vector& z, double tau, Vector m) {
    const double h = 0.5 * tau;
    const Eigen::Index n = sys_.dim();
    const Matrix base = Matrix::Identity(n, n) - h * sys_.A();
    const double scale = std::max(1.0, sys_.norm_H(z));
    auto residual = [&](const Vector& x) { return Vector(base * x - z - h * nonlinear(x)); };
    if (!m.allFinite()) m = z;
    Vector F = residual(m);
    double fnorm = sys_.norm_H(F);
    for (int it = 0; it < 100; ++it) {
      if (fnorm <= 1e-14 * scale) return m;
      const Matrix D = jacobian(damping_, Bs_adj_ * m, sys_.U());
      const Matrix J = base + h * Bs_ * D * Bs_adj_;
      const Vector dm = J.partialPivLu().solve(F);
      double lambda = 1.0;
      Vector trial = m - dm;
      Vector Ft = residual(trial);
      double ft = sys_.norm_H(Ft);
      while (!(ft <= (1.0 - 0.5 * lambda) * fnorm) && lambda > 1e-12) {
        lambda *= 0.5;
        trial = m - lambda * dm;
        Ft = residual(trial);
        ft = sys_.norm_H(Ft);
      }
      if (!(ft < fnorm)) break;
      const double step = lambda * sys_.norm_H(dm);
      m = trial;
      F = Ft;
      fnorm = ft;
      if (step <= 1e-13 * scale && fnorm <= 1e-10 * scale) return m;
    }
    if (fnorm <= 1e-10 * scale) return m;
    throw Error(ErrorCode::StepRejectionLimit, "stage equation did not converge");
  }

  const SemiDiscreteSystem& sys_;
  const DampingSpec& damping_;
  Matrix Bs_;
  Matrix Bs_adj_;
  std::map<double, Eigen::PartialPivLU<Matrix>> cache_;
};

// Advances z by tau, halving recursively until the Richardson estimate
// meets the target.
Vector controlled_step(Stepper& stepper, const SemiDiscreteSystem& sys,
                       const IntegratorConfig& cfg, const Vector& z, double tau,
                       int depth) {
  const Vector full = stepper.step(z, tau);
  const Vector half = stepper.step(z, 0.5 * tau);
  const Vector two = stepper.step(half, 0.5 * tau);
  const double err = sys.norm_H(full - two) / 3.0;
  if (err <= cfg.target * std::max(1.0, sys.norm_H(z))) return two;
  if (depth >= cfg.max_halvings) {
    throw Error(ErrorCode::StepRejectionLimit,
                "local error target unreachable after step halving");
  }
  const Vector mid = controlled_step(stepper, sys, cfg, z, 0.5 * tau, depth + 1);
  return controlled_step(stepper, sys, cfg, mid, 0.5 * tau, depth + 1);
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  }
  if (!(t_end > 0.0) || !std::isfinite(t_end)) {
    throw Error(ErrorCode::InvalidArgument, "t_end must be positive");
  }
  if (error_control && !(target > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "error target must be positive");
  }
  if (max_halvings < 0) {
    throw Error(ErrorCode::InvalidArgument, "max_halvings must be >= 0");
  }
}

Trajectory integrate(const SemiDiscreteSystem& system, const DampingSpec& damping,
                     const Vector& z0, const IntegratorConfig& config,
                     const LyapunovCertificate* cert) {
  config.validate();
  validate(damping);
  if (z0.size() != system.dim() || !z0.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "z0 must be finite with dimension n");
  }
  if (cert && cert->P.rows() != system.dim()) {
    throw Error(ErrorCode::InvalidArgument, "certificate dimension mismatch");
  }

  Stepper stepper(system, damping);
  Trajectory traj;
  if (cert) traj.V_values.emplace();
  auto record = [&](double t, const Vector& z) {
    traj.times.push_back(t);
    if (config.store_states) traj.states.push_back(z);
    traj.norm_H.push_back(system.norm_H(z));
    traj.norm_DA.push_back(system.norm_DA(z));
    traj.damping_power.push_back(stepper.damping_power(z));
    if (cert) traj.V_values->push_back(eval_V(*cert, z));
  };

  const auto steps = static_cast<long long>(std::ceil(config.t_end / config.dt - 1e-9));
  Vector z = z0;
  record(0.0, z);
  double t = 0.0;
  for (long long s = 1; s <= steps; ++s) {
    // Nominal step dt keeps the LU cache small; only the last step differs.
    const double t_next = s < steps ? static_cast<double>(s) * config.dt : config.t_end;
    const double tau = s < steps ? config.dt : config.t_end - t;
    z = config.error_control ? controlled_step(stepper, system, config, z, tau, 0)
                             : stepper.step(z, tau);
    if (!z.allFinite()) {
      throw Error(ErrorCode::Overflow, "state became non-finite");
    }
    const double prev = traj.norm_H.back();
    record(t_next, z);
    if (traj.norm_H.back() > prev * (1.0 + 1e-10) + 1e-300) {
      throw Error(ErrorCode::ContractionViolation,
                  "||z||_H increased at t = " + std::to_string(t_next));
    }
    t = t_next;
  }
  traj.t_star = detect_unit_ball_entry(traj);
  return traj;
}

std::optional<double> detect_unit_ball_entry(const Trajectory& traj) {
  if (traj.norm_H.empty()) {
    throw Error(ErrorCode::InvalidArgument, "empty trajectory");
  }
  if (traj.norm_H[0] <= 1.0) return traj.times[0];
  for (std::size_t k = 1; k < traj.norm_H.size(); ++k) {
    const double n1 = traj.norm_H[k];
    if (n1 > 1.0) continue;
    const double n0 = traj.norm_H[k - 1];
    const double t0 = traj.times[k - 1];
    const double t1 = traj.times[k];
    double frac;
    if (n1 > 0.0) {
      frac = std::log(n0) / (std::log(n0) - std::log(n1));
    } else {
      frac = (n0 - 1.0) / (n0 - n1);
    }
    return t0 + frac * (t1 - t0);
  }
  return std::nullopt;
}

Vector smooth_initial_state(const SemiDiscreteSystem& system, const Vector& z0,
                            double eps) {
  if (z0.size() != system.dim()) {
    throw Error(ErrorCode::InvalidArgument, "z0 dimension mismatch");
  }
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  const Eigen::Index n = system.dim();
  const Matrix M = Matrix::Identity(n, n) - eps * system.A();
  return M.partialPivLu().solve(z0);
}

}  // namespace dampcert
