#include "dampcert/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>

#include "dampcert/analysis.hpp"
#include "dampcert/errors.hpp"
#include "dampcert/io.hpp"
#include "dampcert/sim.hpp"

#ifndef DAMPCERT_VERSION
#define DAMPCERT_VERSION "0.0.0"
#endif

namespace dampcert {

namespace fs = std::filesystem;

namespace {

constexpr const char* kTrajectory = "trajectory.csv";
constexpr const char* kCertificate = "certificate.txt";
constexpr const char* kPMatrix = "P.mat";
constexpr const char* kDampingReport = "damping_report.csv";
constexpr const char* kDecay = "decay.csv";
constexpr const char* kSweep = "sweep.csv";
constexpr const char* kVerification = "verification.csv";
constexpr const char* kSummary = "summary.txt";
constexpr const char* kPlotScript = "plot.gp";

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t x) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << x;
  return os.str();
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

class Run {
 public:
  Run(const ExperimentConfig& config, const RunContext& ctx)
      : config_(config), ctx_(ctx), dir_(ctx.out_dir) {}

  void write(const std::string& name, const std::string& content) {
    write_text_file(dir_ / name, content);
    files_.push_back(name);
  }

  std::string read(const std::string& name) const { return read_text_file(dir_ / name); }
  bool exists(const std::string& name) const { return fs::exists(dir_ / name); }
  const fs::path& dir() const { return dir_; }
  const ExperimentConfig& config() const { return config_; }
  const RunContext& ctx() const { return ctx_; }
  std::vector<std::string>& files() { return files_; }

 private:
  const ExperimentConfig& config_;
  const RunContext& ctx_;
  fs::path dir_;
  std::vector<std::string> files_;
};

CsvTable read_trajectory(const Run& run) {
  CsvTable table = parse_csv(run.read(kTrajectory));
  for (const char* col : {"t", "norm_H", "norm_DA", "V", "damping_power"}) table.column(col);
  return table;
}

void cmd_simulate(Run& run) {
  const auto& cfg = run.config();
  const SemiDiscreteSystem system = build_system(cfg);
  const DampingSpec damping = cfg.damping.spec();
  const Vector z0 = build_initial_state(cfg, system, run.ctx().config_dir);
  std::optional<LyapunovCertificate> cert;
  if (cfg.analysis.certificate) {
    cert = build_configured_certificate(cfg, system, run.ctx().seed);
  }
  const Trajectory traj =
      integrate(system, damping, z0, integrator_config(cfg), cert ? &*cert : nullptr);

  CsvTable table;
  table.header = {"t", "norm_H", "norm_DA", "V", "damping_power"};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    table.rows.push_back({format_double(traj.times[i]), format_double(traj.norm_H[i]),
                          format_double(traj.norm_DA[i]),
                          format_double(traj.V_values ? (*traj.V_values)[i] : nan),
                          format_double(traj.damping_power[i])});
  }
  run.write(kTrajectory, render_csv(table));
}

void cmd_certify(Run& run) {
  const auto& cfg = run.config();
  const SemiDiscreteSystem system = build_system(cfg);
  const LyapunovCertificate cert = build_configured_certificate(cfg, system, run.ctx().seed);
  run.write(kCertificate, render_certificate(cert));
  std::ostringstream os;
  write_matrix(os, cert.P);
  run.write(kPMatrix, os.str());
}

void cmd_check_damping(Run& run) {
  const auto& cfg = run.config();
  int dim = cfg.analysis.dim;
  if (dim == 0) dim = static_cast<int>(build_system(cfg).control_dim());
  const DampingReport report =
      verify_definition(cfg.damping.spec(), dim, cfg.analysis.trials, run.ctx().seed);
  CsvTable table;
  table.header = {"item", "margin", "pass"};
  for (const auto& c : report.checks) {
    table.rows.push_back({c.item, format_double(c.margin), bool_text(c.pass)});
  }
  run.write(kDampingReport, render_csv(table));
}

void cmd_fit_decay(Run& run) {
  const auto& cfg = run.config();
  const CsvTable table = read_trajectory(run);
  const auto t = table.numeric_column("t");
  const auto norm = table.numeric_column("norm_H");

  CsvTable out;
  out.header = {"model", "rate", "prefactor", "t_lo", "t_hi", "r_squared"};
  auto add = [&](const DecayEstimate& e) {
    out.rows.push_back({std::string(to_string(e.model)), format_double(e.rate),
                        format_double(e.prefactor), format_double(e.t_lo),
                        format_double(e.t_hi), format_double(e.r_squared)});
  };
  for (const auto& fit : cfg.analysis.fits) {
    if (fit == "exponential") {
      add(fit_exponential(t, norm));
    } else if (fit == "polynomial") {
      add(fit_polynomial(t, norm));
    } else if (fit == "linear_phase") {
      const SemiDiscreteSystem system = build_system(cfg);
      const DampingSpec damping = cfg.damping.spec();
      Trajectory traj;
      traj.times = t;
      traj.norm_H = norm;
      traj.norm_DA = table.numeric_column("norm_DA");
      traj.damping_power = table.numeric_column("damping_power");
      traj.t_star = detect_unit_ball_entry(traj);
      const double B_norm = std::sqrt(system.k()) * system.B_adjoint_norm();
      add(fit_linear_phase(traj, damping.bound(), B_norm));
    }
  }
  run.write(kDecay, render_csv(out));
}

void cmd_sweep(Run& run) {
  const auto& cfg = run.config();
  if (cfg.analysis.radii.empty()) {
    throw Error(ErrorCode::ValidationError, "[analysis] radii is required for sweep");
  }
  const SemiDiscreteSystem system = build_system(cfg);
  const SweepResult result =
      sweep_semiglobal(system, cfg.damping.spec(), cfg.analysis.radii, integrator_config(cfg));
  CsvTable out;
  out.header = {"r", "mu", "K", "r_squared"};
  for (const auto& row : result.rows) {
    out.rows.push_back({format_double(row.r), format_double(row.mu), format_double(row.K),
                        format_double(row.r_squared)});
  }
  run.write(kSweep, render_csv(out));
}

void cmd_verify(Run& run) {
  const CsvTable table = read_trajectory(run);
  const LyapunovCertificate cert = parse_certificate(run.read(kCertificate));
  const auto V = table.numeric_column("V");
  if (V.empty() || std::any_of(V.begin(), V.end(), [](double v) { return std::isnan(v); })) {
    throw Error(ErrorCode::InvalidArgument,
                "trajectory has no V values; simulate with [analysis] certificate set");
  }
  const VerificationReport rep = verify_lyapunov_decrease(
      table.numeric_column("t"), table.numeric_column("norm_H"), V, cert.C);
  CsvTable out;
  out.header = {"check", "max_violation", "tolerance", "pass", "samples"};
  out.rows.push_back({rep.check, format_double(rep.max_violation), format_double(rep.tolerance),
                      bool_text(rep.pass), std::to_string(rep.samples)});
  run.write(kVerification, render_csv(out));
}

std::string summarize_csv(const std::string& name, const std::string& text) {
  const CsvTable t = parse_csv(text);
  std::ostringstream os;
  os << "== " << name << " ==\n";
  os << "columns: ";
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? ", " : "") << t.header[i];
  os << "\nrows: " << t.rows.size() << "\n";
  auto row = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "  ") << r[i];
    os << "\n";
  };
  if (t.rows.size() <= 20) {
    for (const auto& r : t.rows) row(r);
  } else {
    os << "first:\n";
    row(t.rows.front());
    os << "last:\n";
    row(t.rows.back());
  }
  return os.str();
}

std::string plot_script(const Run& run) {
  std::ostringstream os;
  os << "# gnuplot script; run with `gnuplot plot.gp` inside this directory.\n";
  os << "set datafile separator ','\n";
  os << "set key autotitle columnhead\n";
  os << "set terminal pngcairo size 900,600\n";
  if (run.exists(kTrajectory)) {
    os << "\nset output 'trajectory.png'\n";
    os << "set logscale y\n";
    os << "set xlabel 't'\n";
    os << "plot '" << kTrajectory << "' using 1:2 with lines, '' using 1:3 with lines\n";
    os << "unset logscale y\n";
  }
  if (run.exists(kSweep)) {
    os << "\nset output 'sweep.png'\n";
    os << "set logscale x\n";
    os << "set xlabel 'r'\n";
    os << "plot '" << kSweep << "' using 1:2 with linespoints\n";
    os << "unset logscale x\n";
  }
  return os.str();
}

void cmd_report(Run& run) {
  std::ostringstream os;
  os << "dampcert report\n\n";
  bool any = false;
  for (const char* name :
       {kTrajectory, kDampingReport, kDecay, kSweep, kVerification}) {
    if (!run.exists(name)) continue;
    any = true;
    os << summarize_csv(name, run.read(name)) << "\n";
  }
  if (run.exists(kCertificate)) {
    any = true;
    os << "== " << kCertificate << " ==\n" << run.read(kCertificate) << "\n";
  }
  if (!any) {
    throw Error(ErrorCode::MissingInput,
                "no outputs to collate in " + run.dir().string());
  }
  run.write(kSummary, os.str());
  const auto& formats = run.config().output.formats;
  if (std::find(formats.begin(), formats.end(), "gnuplot") != formats.end()) {
    run.write(kPlotScript, plot_script(run));
  }
}

void write_manifest(Run& run, std::string_view name, const std::string& started) {
  std::ostringstream os;
  os << "subcommand = " << name << "\n";
  os << "version = " << tool_version() << "\n";
  os << "config_hash = " << hex64(fnv1a(serialize_config(run.config()))) << "\n";
  os << "seed = " << run.ctx().seed << "\n";
  os << "started = " << started << "\n";
  os << "finished = " << utc_now() << "\n";
  for (const auto& f : run.files()) {
    const std::string content = run.read(f);
    os << "file = " << f << " " << content.size() << " " << hex64(fnv1a(content)) << "\n";
  }
  const std::string manifest = "manifest_" + std::string(name) + ".txt";
  write_text_file(run.dir() / manifest, os.str());
  run.files().push_back(manifest);
}

}  // namespace

std::string_view tool_version() { return DAMPCERT_VERSION; }

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names{"simulate", "certify", "check-damping",
                                              "fit-decay", "sweep",   "verify",
                                              "report"};
  return names;
}

std::string resolve_out_dir(const ExperimentConfig& config,
                            const std::optional<std::string>& cli_out) {
  if (cli_out && !cli_out->empty()) return *cli_out;
  if (const char* env = std::getenv("DAMPCERT_OUT_DIR"); env && *env) return env;
  return config.output.directory;
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

LyapunovCertificate build_configured_certificate(const ExperimentConfig& config,
                                                 const SemiDiscreteSystem& system,
                                                 std::uint64_t seed) {
  const DampingSpec damping = config.damping.spec();
  const auto& an = config.analysis;
  const CertificateKind kind = an.certificate.value_or(
      system.S_choice() == NormChoice::U_euclidean ? CertificateKind::global_exp_SU
                                                   : CertificateKind::semiglobal_exp_SneqU);
  auto need = [](const std::optional<double>& x, const char* key) {
    if (!x) {
      throw Error(ErrorCode::ValidationError,
                  std::string("[analysis] ") + key + " is required for this certificate");
    }
    return *x;
  };
  switch (kind) {
    case CertificateKind::global_exp_SU:
      return build_exp_certificate(system, damping);
    case CertificateKind::finite_dim:
      return build_finite_dim_certificate(system, damping);
    case CertificateKind::semiglobal_exp_SneqU: {
      const double r = need(an.r, "r");
      const double cS = an.c_S ? *an.c_S : estimate_cS(system, an.trials, seed);
      return build_semiglobal_certificate(system, damping, r, cS);
    }
    case CertificateKind::semiglobal_poly: {
      const double r = need(an.r, "r");
      const double gamma = need(an.gamma, "gamma");
      ProbeSettings probes;
      probes.seed = seed;
      const double C_theta =
          an.C_theta ? *an.C_theta : calibrate_C_theta(system, damping, gamma, 0.1, probes);
      return build_poly_certificate(system, damping, r, gamma, C_theta, 0.1, probes);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown certificate kind");
}

std::vector<std::string> run_subcommand(std::string_view name, const ExperimentConfig& config,
                                        const RunContext& ctx) {
  const std::string started = utc_now();
  Run run(config, ctx);
  if (name == "simulate") {
    cmd_simulate(run);
  } else if (name == "certify") {
    cmd_certify(run);
  } else if (name == "check-damping") {
    cmd_check_damping(run);
  } else if (name == "fit-decay") {
    cmd_fit_decay(run);
  } else if (name == "sweep") {
    cmd_sweep(run);
  } else if (name == "verify") {
    cmd_verify(run);
  } else if (name == "report") {
    cmd_report(run);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown subcommand `" + std::string(name) + "`");
  }
  write_manifest(run, name, started);
  return run.files();
}

int run_cli(std::string_view name, const std::string& config_path,
            const std::optional<std::string>& cli_out, std::optional<std::uint64_t> seed,
            std::ostream& out, std::ostream& err) {
  try {
    const ExperimentConfig config = parse_config(read_text_file(config_path));
    RunContext ctx;
    ctx.out_dir = resolve_out_dir(config, cli_out);
    ctx.seed = seed.value_or(1);
    const fs::path parent = fs::path(config_path).parent_path();
    ctx.config_dir = parent.empty() ? "." : parent.string();
    const auto files = run_subcommand(name, config, ctx);
    for (const auto& f : files) out << (fs::path(ctx.out_dir) / f).string() << "\n";
    out.flush();
    return 0;
  } catch (const Error& e) {
    out.flush();
    err << "dampcert " << name << ": " << e.what() << "\n";
    err << "error: " << to_string(e.code()) << std::endl;
    return exit_status(e.code());
  } catch (const std::exception& e) {
    out.flush();
    err << "dampcert " << name << ": " << e.what() << "\n";
    err << "error: IoError" << std::endl;
    return exit_status(ErrorCode::IoError);
  }
}

}  // namespace dampcert
