// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "dampcert/analysis.hpp"
#include "dampcert/damping.hpp"
#include "dampcert/errors.hpp"
#include "dampcert/io.hpp"
#include "dampcert/linalg.hpp"
#include "dampcert/lyapunov.hpp"
#include "dampcert/models.hpp"
#include "dampcert/sim.hpp"
#include "test_util.hpp"

using namespace dampcert;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

SemiDiscreteSystem scalar_system() {
  return make_finite_dim(Matrix::Zero(1, 1), Matrix::Identity(1, 1), 1.0);
}

SemiDiscreteSystem oscillator_system() {
  Matrix A(2, 2);
  A << 0.0, 1.0, -1.0, 0.0;
  Matrix B(2, 1);
  B << 0.0, 1.0;
  return make_finite_dim(A, B, 1.0);
}

std::vector<double> grid(double t0, double t1, int n) {
  std::vector<double> t;
  for (int i = 0; i <= n; ++i) t.push_back(t0 + (t1 - t0) * i / n);
  return t;
}

double norm_at(const Trajectory& tr, double t) {
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (std::abs(tr.times[k] - t) < 1e-9) return tr.norm_H[k];
  }
  return std::nan("");
}

Outcome lyapunov_exactness() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> size(1, 30);
  double worst = 0.0;
  const auto start = Clock::now();
  for (int i = 0; i < 100; ++i) {
    const int n = size(rng);
    const Matrix A = testutil::random_hurwitz(rng, n, 0.1);
    const Matrix Q = testutil::random_spd(rng, n);
    const Matrix P = solve_lyapunov(A, Q);
    const double res = (A.transpose() * P + P * A + Q).norm() / Q.norm();
    worst = std::max(worst, res);
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-10 && elapsed < 5.0,
          "max residual/|Q|_F = " + fmt("%.2e", worst) + ", solve time " +
              fmt("%.2f", elapsed) + " s"};
}

Outcome gramian_equivalence() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> size(2, 12);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int n = size(rng);
    const Matrix A = testutil::random_hurwitz(rng, n, 0.3);
    const double alpha = 0.05 * (i + 1);
    const Matrix G = gramian_quadrature(A, alpha, 1e-12);
    const Matrix L = solve_lyapunov(A, Matrix::Identity(n, n)) + alpha * Matrix::Identity(n, n);
    worst = std::max(worst, (G - L).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-6, "max entry difference " + fmt("%.2e", worst)};
}

Outcome poly_chain() {
  double worst = -std::numeric_limits<double>::infinity();
  bool ok = true;
  auto record = [&](const std::pair<VerificationReport, VerificationReport>& r) {
    ok = ok && r.first.pass && r.second.pass;
    worst = std::max({worst, r.first.max_violation, r.second.max_violation});
  };
  Matrix a(1, 1);
  a << -1.0;
  Vector one(1);
  one << 1.0;
  // Exact Gramian 1/2 plus a shift.
  Matrix P(1, 1);
  P << 0.5 + 0.1;
  record(verify_poly_chain(a, InnerProduct::identity(1), P, 1.0, one, grid(0.0, 10.0, 100)));

  std::mt19937_64 rng(303);
  for (int i = 0; i < 10; ++i) {
    const int n = 2 + i % 4;
    const Matrix A = testutil::random_hurwitz(rng, n, 0.2);
    const Matrix Pq = gramian_quadrature(A, 0.05, 1e-12);
    const Vector z0 = testutil::random_vector(rng, n);
    record(verify_poly_chain(A, InnerProduct::identity(n), Pq, 1.0, z0, grid(0.0, 8.0, 64)));
  }
  return {ok, "11 instances, largest violation " + fmt("%.2e", worst)};
}

Outcome strict_decrease() {
  const auto start = Clock::now();
  const auto sys = oscillator_system();
  const auto damping = DampingSpec::clamp(1.0);
  const auto cert = build_exp_certificate(sys, damping);
  bool ok = true;
  std::ostringstream detail;
  for (double r : {1.0, 2.0, 5.0, 10.0}) {
    Vector z0(2);
    z0 << r, 0.0;
    auto run = [&](double dt) {
      IntegratorConfig cfg;
      cfg.dt = dt;
      cfg.t_end = 30.0;
      cfg.error_control = false;
      cfg.store_states = false;
      return verify_lyapunov_decrease(integrate(sys, damping, z0, cfg, &cert), cert);
    };
    const auto coarse = run(1e-3);
    const auto fine = run(5e-4);
    bool shrinks = false;
    if (fine.max_violation <= 0.0) {
      shrinks = true;
    } else if (coarse.max_violation > 0.0) {
      shrinks = coarse.max_violation / fine.max_violation >= 2.0;
    }
    ok = ok && coarse.pass && shrinks;
    detail << "r=" << r << ": viol " << fmt("%.2e", coarse.max_violation) << " -> "
           << fmt("%.2e", fine.max_violation) << " (x"
           << fmt("%.2f", coarse.max_violation / fine.max_violation) << ")"
           << (coarse.pass ? "" : " decrease-fail") << (shrinks ? "" : " shrink-fail") << "; ";
  }
  const double elapsed = seconds_since(start);
  ok = ok && elapsed < 30.0;
  detail << fmt("%.1f", elapsed) << " s";
  return {ok, detail.str()};
}

Outcome semiglobal_decay() {
  const auto start = Clock::now();
  const auto kdv = discretize_kdv(2.0 * M_PI, 64, [](double) { return 1.0; }, 1.0);
  IntegratorConfig cfg;
  cfg.dt = 5e-3;
  cfg.t_end = 15.0;
  cfg.store_states = false;
  const std::vector<double> radii{1.0, 5.0, 25.0};
  const auto sat = sweep_semiglobal(kdv, DampingSpec::clamp(1.0), radii, cfg);
  const auto lin = sweep_semiglobal(kdv, DampingSpec::linear(1.0), radii, cfg);
  bool ok = sat.rows.size() == 3 && lin.rows.size() == 3 && sat.mu_nonincreasing;
  std::ostringstream detail;
  detail << "clamp mu:";
  for (const auto& row : sat.rows) {
    ok = ok && row.r_squared >= 0.99;
    detail << " " << fmt("%.6f", row.mu) << " (R2 " << fmt("%.4f", row.r_squared) << ")";
  }
  if (ok) ok = sat.rows[2].mu <= 1.2 * sat.rows[0].mu;
  double spread = 0.0;
  for (const auto& row : lin.rows) {
    spread = std::max(spread, std::abs(row.mu - lin.rows[0].mu) / lin.rows[0].mu);
  }
  ok = ok && spread <= 0.02;
  const double elapsed = seconds_since(start);
  ok = ok && elapsed < 300.0;
  detail << "; linear spread " << fmt("%.2e", spread) << "; " << fmt("%.1f", elapsed) << " s";
  return {ok, detail.str()};
}

Outcome two_phase() {
  const auto damping = DampingSpec::clamp(1.0);
  bool ok = true;
  std::ostringstream detail;
  auto check_run = [&](const char* label, const SemiDiscreteSystem& sys, const Vector& z0,
                       double t_end) {
    const auto cert = build_exp_certificate(sys, damping);
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = t_end;
    cfg.store_states = false;
    const auto tr = integrate(sys, damping, z0, cfg, &cert);
    if (!tr.t_star) {
      ok = false;
      detail << label << ": no unit-ball entry; ";
      return tr;
    }
    const auto lp = fit_linear_phase(tr, damping.bound(), cert.B_norm);
    const auto tail = fit_exponential(tr, FitWindow{*tr.t_star, tr.times.back()});
    ok = ok && lp.within_bound && lp.rate <= 0.0 && tail.r_squared >= 0.99;
    detail << label << ": t*=" << fmt("%.2f", *tr.t_star) << " slope "
           << fmt("%.4f", lp.rate) << " >= " << fmt("%.4f", *lp.slope_bound) << ", tail mu "
           << fmt("%.4f", tail.rate) << " R2 " << fmt("%.4f", tail.r_squared) << "; ";
    return tr;
  };
  Vector s100(1);
  s100 << 100.0;
  const auto scalar = check_run("scalar", scalar_system(), s100, 130.0);
  Vector o100(2);
  o100 << 100.0, 0.0;
  check_run("oscillator", oscillator_system(), o100, 220.0);

  // z' = -sat(z): linear until |z| = 1, exponential after.
  Vector s5(1);
  s5 << 5.0;
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 8.0;
  const auto small = integrate(scalar_system(), damping, s5, cfg);
  double worst = 0.0;
  for (double t : {1.0, 4.0, 6.0}) {
    worst = std::max(worst, std::abs(norm_at(scalar, t) - (100.0 - t)));
    const double exact = t <= 4.0 ? 5.0 - t : std::exp(-(t - 4.0));
    worst = std::max(worst, std::abs(norm_at(small, t) - exact));
  }
  ok = ok && worst <= 1e-4;
  detail << "closed-form error " << fmt("%.2e", worst);
  return {ok, detail.str()};
}

Outcome damping_definition() {
  const auto start = Clock::now();
  bool ok = true;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& spec : {DampingSpec::linear(1.0), DampingSpec::clamp(1.0),
                           DampingSpec::tanh(1.0), DampingSpec::arctan(1.0),
                           DampingSpec::norm_saturation(1.0)}) {
    for (int dim : {1, 4, 64}) {
      const auto report = verify_definition(spec, dim, 10000, 7);
      for (const char* item : {"monotonicity", "inf_sat"}) {
        const auto* c = report.find(item);
        ok = ok && c != nullptr && c->pass && c->margin >= -1e-12;
        if (c) worst = std::min(worst, c->margin);
      }
    }
  }
  const auto weak = verify_definition(DampingSpec::weak(1.0, 0.5), 1, 10000, 7);
  const auto* law = weak.find("h_power_law");
  const bool weak_ok = weak.h_singular_at_zero && law != nullptr && law->pass;
  ok = ok && weak_ok;
  return {ok, "smallest margin " + fmt("%.2e", worst) + "; weak power law " +
                  (law ? fmt("%.1e", law->margin) : std::string("missing")) +
                  (weak.h_singular_at_zero ? ", h(0) flagged" : ", h(0) NOT flagged") + "; " +
                  fmt("%.1f", seconds_since(start)) + " s"};
}

Outcome conservation() {
  const auto wave = discretize_wave(32, [](double) { return 0.0; }, 1.0);
  std::mt19937_64 rng(808);
  Vector z0 = testutil::random_vector(rng, wave.dim());
  z0 /= wave.norm_H(z0);
  IntegratorConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_end = 10.0;
  cfg.error_control = false;
  cfg.store_states = false;
  const auto tr = integrate(wave, DampingSpec::clamp(1.0), z0, cfg);
  double drift = 0.0;
  for (double n : tr.norm_H) drift = std::max(drift, std::abs(n - tr.norm_H[0]));
  return {drift <= 1e-8 && tr.times.back() >= 10.0 - 1e-12,
          "max |norm_H(t) - norm_H(0)| = " + fmt("%.2e", drift) + " with norm_H(0) = 1"};
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string(DAMPCERT_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "dampcert_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  bool ok = true;
  int compared = 0;
  for (const char* example : {"scalar_saturated.ini", "kdv_sweep.ini"}) {
    const std::string cfg = std::string(DAMPCERT_DOCS_DIR) + "/examples/" + example;
    std::vector<fs::path> dirs;
    for (const char* run : {"a", "b"}) {
      const fs::path out = root / (std::string(example) + "_" + run);
      for (const char* cmd : {"simulate", "fit-decay"}) {
        const int status = run_cli(std::string(cmd) + " --config " + cfg + " --seed 11 --out " +
                                       out.string(),
                                   root / "cli.log");
        if (status != 0) {
          return {false, std::string(cmd) + " on " + example + " exited with " +
                             std::to_string(status)};
        }
      }
      dirs.push_back(out);
    }
    for (const char* f : {"trajectory.csv", "decay.csv"}) {
      ok = ok && read_text_file(dirs[0] / f) == read_text_file(dirs[1] / f);
      ++compared;
    }
  }
  fs::remove_all(root);
  return {ok, std::to_string(compared) + " CSV pairs compared"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"lyapunov-exactness", lyapunov_exactness},
      {"gramian-equivalence", gramian_equivalence},
      {"poly-chain", poly_chain},
      {"strict-decrease", strict_decrease},
      {"semiglobal-decay", semiglobal_decay},
      {"two-phase", two_phase},
      {"damping-definition", damping_definition},
      {"conservation", conservation},
      {"determinism", determinism},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
