#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "dampcert/commands.hpp"
#include "dampcert/config.hpp"
#include "dampcert/errors.hpp"
#include "dampcert/io.hpp"

using namespace dampcert;
namespace fs = std::filesystem;

namespace {

const std::string kDocs = DAMPCERT_DOCS_DIR;

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dampcert_test_" + name);
  fs::remove_all(p);
  return p;
}

struct Outcome {
  int status = -1;
  std::string output;
};

Outcome run_tool(const std::string& args, const std::string& env = "") {
  const fs::path log = fs::temp_directory_path() / "dampcert_test_cli.log";
  const std::string cmd =
      env + " " + std::string(DAMPCERT_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  Outcome o;
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  o.output = read_text_file(log);
  return o;
}

std::string last_line(const std::string& text) {
  std::string t = text;
  while (!t.empty() && t.back() == '\n') t.pop_back();
  const auto pos = t.rfind('\n');
  return pos == std::string::npos ? t : t.substr(pos + 1);
}

ErrorCode parse_error_code(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a config error");
  return ErrorCode::IoError;
}

std::string config_path(const std::string& name) { return kDocs + "/examples/" + name; }

}  // namespace

TEST_CASE("minimal finite_dim config gets defaults") {
  const auto cfg = parse_config(read_text_file(config_path("minimal_finite_dim.ini")));
  CHECK(cfg.system.name == "finite_dim");
  CHECK(cfg.sim.dt == 1e-3);
  CHECK(cfg.sim.error_control);
  CHECK(cfg.damping.kind == DampingKind::clamp);
  REQUIRE(cfg.system.A.has_value());
  CHECK(cfg.system.A->rows() == 2);
  CHECK((*cfg.system.A)(1, 0) == -1.0);
}

TEST_CASE("negative N is a validation error naming N") {
  const std::string text = "[system]\nname = kdv\nN = -4\n[damping]\nkind = clamp\n";
  try {
    parse_config(text);
    FAIL("expected ValidationError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ValidationError);
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("N") != std::string::npos);
    CHECK(msg.find(">= 16") != std::string::npos);
  }
}

TEST_CASE("validation errors are aggregated") {
  const std::string text =
      "[system]\nname = kdv\nN = 3\nk = -1\n[damping]\nkind = magic\n[sim]\ndt = 0\n";
  try {
    parse_config(text);
    FAIL("expected ValidationError");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("4 validation error(s)") != std::string::npos);
    for (const char* line : {"line 3", "line 4", "line 6", "line 8"}) {
      CHECK(msg.find(line) != std::string::npos);
    }
  }
}

TEST_CASE("syntax errors carry the line number") {
  try {
    parse_config("[system]\nname finite_dim\n");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK(parse_error_code("[system\nname = kdv\n") == ErrorCode::ParseError);
  CHECK(parse_error_code("name = kdv\n") == ErrorCode::ParseError);
  CHECK(parse_error_code("[damping]\nkind = clamp\n") == ErrorCode::ValidationError);
  CHECK(parse_error_code("[system]\nname = kdv\nname = wave\n[damping]\n") ==
        ErrorCode::ValidationError);
}

TEST_CASE("KdV sweep config round-trips") {
  const auto cfg = parse_config(read_text_file(config_path("kdv_sweep.ini")));
  CHECK(cfg.analysis.radii == std::vector<double>{1.0, 5.0, 25.0});
  const std::string text = serialize_config(cfg);
  const auto back = parse_config(text);
  CHECK(back == cfg);
  CHECK(serialize_config(back) == text);
}

TEST_CASE("round-trip keeps optional and list fields") {
  ExperimentConfig cfg;
  cfg.system.name = "wave";
  cfg.system.N = 24;
  cfg.system.a = AProfile::indicator(0.25, 0.5, 2.0);
  cfg.damping.kind = DampingKind::weak;
  cfg.damping.q = 0.3;
  cfg.damping.C2 = 0.125;
  cfg.damping.h = HFunction::table({{0.0, 1.0}, {1.5, 2.0}});
  cfg.sim.z0.form = InitialState::Form::values;
  cfg.sim.z0.values = {0.1, -2.5, 1e-17};
  cfg.analysis.fits = {"polynomial", "exponential"};
  cfg.analysis.gamma = 0.75;
  cfg.analysis.certificate = CertificateKind::semiglobal_poly;
  cfg.output.formats = {"csv"};
  CHECK(parse_config(serialize_config(cfg)) == cfg);
}

TEST_CASE("output directory precedence") {
  ExperimentConfig cfg;
  cfg.output.directory = "from_config";
  ::unsetenv("DAMPCERT_OUT_DIR");
  CHECK(resolve_out_dir(cfg, std::nullopt) == "from_config");
  ::setenv("DAMPCERT_OUT_DIR", "from_env", 1);
  CHECK(resolve_out_dir(cfg, std::nullopt) == "from_env");
  CHECK(resolve_out_dir(cfg, std::string("from_cli")) == "from_cli");
  ::unsetenv("DAMPCERT_OUT_DIR");
}

TEST_CASE("simulate on the scalar saturated example") {
  const fs::path out = fresh_dir("scalar");
  const auto o = run_tool("simulate --config " + config_path("scalar_saturated.ini") +
                          " --out " + out.string());
  REQUIRE(o.status == 0);
  const auto table = parse_csv(read_text_file(out / "trajectory.csv"));
  CHECK(table.header ==
        std::vector<std::string>{"t", "norm_H", "norm_DA", "V", "damping_power"});
  const auto t = table.numeric_column("t");
  const auto n = table.numeric_column("norm_H");
  bool found = false;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] == 4.0) {
      found = true;
      CHECK(std::abs(n[k] - 1.0) <= 1e-3);
    }
  }
  CHECK(found);
  for (const auto& row : table.rows) CHECK(row.size() == 5);
  CHECK(fs::exists(out / "manifest_simulate.txt"));
}

TEST_CASE("certify a stable system without input") {
  const fs::path out = fresh_dir("certify");
  const auto o = run_tool("certify --config " + config_path("certify_no_input.ini") +
                          " --out " + out.string());
  REQUIRE(o.status == 0);
  const auto cert = parse_certificate(read_text_file(out / "certificate.txt"));
  CHECK(cert.M == 0.0);
  const Matrix P = read_matrix_file(out / "P.mat");
  REQUIRE(P.rows() == 1);
  CHECK(P(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("verify without a trajectory reports MissingInput") {
  const fs::path out = fresh_dir("missing");
  fs::create_directories(out);
  const auto o = run_tool("verify --config " + config_path("scalar_saturated.ini") +
                          " --out " + out.string());
  CHECK(o.status == exit_status(ErrorCode::MissingInput));
  CHECK(last_line(o.output) == "error: MissingInput");
}

TEST_CASE("invalid config exits with the validation status") {
  const fs::path dir = fresh_dir("badcfg");
  fs::create_directories(dir);
  write_text_file(dir / "bad.ini", "[system]\nname = kdv\nN = -4\n[damping]\nkind = clamp\n");
  const auto o = run_tool("simulate --config " + (dir / "bad.ini").string());
  CHECK(o.status == exit_status(ErrorCode::ValidationError));
  CHECK(last_line(o.output) == "error: ValidationError");
  const auto missing = run_tool("simulate --config " + (dir / "nope.ini").string());
  CHECK(last_line(missing.output) == "error: MissingInput");
}

TEST_CASE("full pipeline, determinism and idempotent report") {
  const fs::path a = fresh_dir("pipe_a");
  const fs::path b = fresh_dir("pipe_b");
  const std::string cfg = config_path("scalar_saturated.ini");
  for (const auto& dir : {a, b}) {
    for (const char* cmd : {"simulate", "fit-decay", "certify", "verify", "check-damping"}) {
      const auto o = run_tool(std::string(cmd) + " --config " + cfg + " --seed 3", "DAMPCERT_OUT_DIR=" + dir.string());
      INFO(cmd << ": " << o.output);
      REQUIRE(o.status == 0);
    }
  }
  for (const char* f : {"trajectory.csv", "decay.csv", "verification.csv",
                        "damping_report.csv", "certificate.txt", "P.mat"}) {
    CHECK(read_text_file(a / f) == read_text_file(b / f));
  }
  const auto verification = parse_csv(read_text_file(a / "verification.csv"));
  CHECK(verification.rows.at(0).at(verification.column("pass")) == "true");

  REQUIRE(run_tool("report --config " + cfg + " --out " + a.string()).status == 0);
  const std::string first = read_text_file(a / "summary.txt");
  const std::string plot = read_text_file(a / "plot.gp");
  CHECK(plot.find("trajectory.csv") != std::string::npos);
  fs::remove(a / "summary.txt");
  fs::remove(a / "plot.gp");
  REQUIRE(run_tool("report --config " + cfg + " --out " + a.string()).status == 0);
  CHECK(read_text_file(a / "summary.txt") == first);
  CHECK(read_text_file(a / "plot.gp") == plot);
  CHECK(first.find("== decay.csv ==") != std::string::npos);
}

TEST_CASE("sweep subcommand writes the documented schema") {
  const fs::path out = fresh_dir("sweep");
  const auto o = run_tool("sweep --config " + config_path("kdv_sweep.ini") + " --out " +
                          out.string());
  REQUIRE(o.status == 0);
  const auto table = parse_csv(read_text_file(out / "sweep.csv"));
  CHECK(table.header == std::vector<std::string>{"r", "mu", "K", "r_squared"});
  CHECK(table.rows.size() == 3);
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
}
