#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dampcert/linalg.hpp"

namespace dampcert {

enum class DampingKind { linear, norm_saturation, clamp, tanh, arctan, weak };

std::string_view to_string(DampingKind kind);
std::optional<DampingKind> parse_damping_kind(std::string_view name);

/// The comparison function h in ||sigma(s) - C1 s|| <= C2 h(||s||) <sigma(s), s>.
class HFunction {
 public:
  enum class Form { constant, power, table };

  HFunction() = default;
  static HFunction constant(double value);
  static HFunction power(double exponent);
  /// Piecewise-linear through (x, h) knots sorted by x; constant outside.
  static HFunction table(std::vector<std::pair<double, double>> knots);

  Form form() const { return form_; }
  double value() const { return value_; }
  double exponent() const { return exponent_; }
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

  /// Throws DomainError for x < 0, or at x = 0 when h blows up there.
  double operator()(double x) const;
  bool singular_at_zero() const { return form_ == Form::power && exponent_ < 0.0; }
  bool nondecreasing() const;

  bool operator==(const HFunction&) const = default;

 private:
  Form form_ = Form::constant;
  double value_ = 1.0;
  double exponent_ = 0.0;
  std::vector<std::pair<double, double>> knots_;
};

/// A nonlinear damping function sigma together with its constants C1, C2, h.
struct DampingSpec {
  DampingKind kind = DampingKind::linear;
  double level = 1.0;     // saturation level s0
  double gain = 1.0;      // c for linear and weak damping
  double exponent = 0.5;  // q for weak damping
  double C1 = 1.0;
  double C2 = 1.0;
  HFunction h;

  static DampingSpec linear(double gain = 1.0);
  static DampingSpec norm_saturation(double level = 1.0);
  static DampingSpec clamp(double level = 1.0);
  static DampingSpec tanh(double level = 1.0);
  static DampingSpec arctan(double level = 1.0);
  /// sigma(s) = c sign(s) |s|^q with C1 = c and h(x) = x^{q-1}.
  static DampingSpec weak(double gain = 1.0, double q = 0.5);
  /// Catalogue defaults for `kind` (C1, C2 and h filled in).
  static DampingSpec make(DampingKind kind, double level, double gain, double q);

  bool componentwise() const;
  /// Per-component bound C_sigma on |sigma|; infinity for unbounded kinds.
  double bound() const;

  bool operator==(const DampingSpec&) const = default;
};

/// Throws InvalidArgument when constants are out of range.
void validate(const DampingSpec& spec);

/// sigma(s). Norm saturation measures ||s|| with `u` (Euclidean overload).
Vector apply(const DampingSpec& spec, const Vector& s);
Vector apply(const DampingSpec& spec, const Vector& s, const InnerProduct& u);

/// Jacobian of sigma at s; derivative singularities are capped at 1e12.
Matrix jacobian(const DampingSpec& spec, const Vector& s, const InnerProduct& u);

double h_eval(const DampingSpec& spec, double x);

struct DampingCheck {
  std::string item;
  double margin = 0.0;
  bool pass = false;
};

struct DampingReport {
  DampingSpec spec;
  int dim = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  bool h_singular_at_zero = false;
  /// Smallest ||s||_S used for the inf-sat check (0 unless h is singular).
  double inf_sat_floor = 0.0;
  std::vector<DampingCheck> checks;

  const DampingCheck* find(std::string_view item) const;
  bool all_pass() const;
  std::string render_text() const;
};

/// Sampled check of local Lipschitz continuity, monotonicity and the
/// sector inequality. Failures are report entries, not exceptions.
DampingReport verify_definition(const DampingSpec& spec, int dim, int trials,
                                std::uint64_t seed);

}  // namespace dampcert
