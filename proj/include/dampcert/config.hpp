#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dampcert/damping.hpp"
#include "dampcert/linalg.hpp"
#include "dampcert/lyapunov.hpp"
#include "dampcert/models.hpp"
#include "dampcert/sim.hpp"

namespace dampcert {

struct SystemConfig {
  std::string name = "finite_dim";  // finite_dim | kdv | wave
  std::optional<Matrix> A;
  std::optional<Matrix> B;
  double k = 1.0;
  double L = 6.283185307179586;
  int N = 64;
  AProfile a = AProfile::constant(1.0);
  /// Defaults to U for finite_dim and sup for the PDE models.
  std::optional<NormChoice> S;
  bool check_controllability = true;
};

struct DampingConfig {
  DampingKind kind = DampingKind::linear;
  double level = 1.0;
  double gain = 1.0;
  double q = 0.5;
  std::optional<double> C1;
  std::optional<double> C2;
  std::optional<HFunction> h;

  DampingSpec spec() const;
};

struct InitialState {
  enum class Form { eigvec, file, values };
  Form form = Form::eigvec;
  int index = 0;
  double scale = 1.0;
  std::string path;
  std::vector<double> values;
};

struct SimConfig {
  double dt = 1e-3;
  double t_end = 10.0;
  bool error_control = true;
  double target = 1e-6;
  InitialState z0;
  bool smooth = false;
};

struct AnalysisConfig {
  std::vector<std::string> fits{"exponential"};
  std::vector<double> radii;
  std::optional<CertificateKind> certificate;
  std::optional<double> r;
  std::optional<double> gamma;
  std::optional<double> C_theta;
  std::optional<double> c_S;
  int trials = 10000;
  int dim = 0;  // check-damping dimension; 0 means the control dimension
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "gnuplot"};
};

struct ExperimentConfig {
  SystemConfig system;
  DampingConfig damping;
  SimConfig sim;
  AnalysisConfig analysis;
  OutputConfig output;
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// INI grammar: [section] headers, `key = value`, `#` comments, comma lists,
/// matrices as rows separated by `;`. Throws ParseError for syntax (with the
/// line number) and ValidationError listing every semantic violation.
ExperimentConfig parse_config(std::string_view text);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// Assembles the configured system.
SemiDiscreteSystem build_system(const ExperimentConfig& config);

/// Initial state; `base_dir` resolves relative z0 file paths.
Vector build_initial_state(const ExperimentConfig& config,
                           const SemiDiscreteSystem& system,
                           const std::string& base_dir = ".");

IntegratorConfig integrator_config(const ExperimentConfig& config);

}  // namespace dampcert
