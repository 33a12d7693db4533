#include "dampcert/damping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "dampcert/errors.hpp"
#include "dampcert/io.hpp"

namespace dampcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDerivativeCap = 1e12;

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Scalar rule f with sigma(x) = sign(x) f(|x|), so sigma is exactly odd.
double scalar_magnitude(const DampingSpec& spec, double a) {
  switch (spec.kind) {
    case DampingKind::clamp: return std::min(a, spec.level);
    case DampingKind::tanh: return spec.level * std::tanh(a / spec.level);
    case DampingKind::arctan: return spec.level * std::atan(a / spec.level);
    case DampingKind::weak: return spec.gain * std::pow(a, spec.exponent);
    case DampingKind::linear: return spec.gain * a;
    case DampingKind::norm_saturation: break;
  }
  return a;
}

double scalar_derivative(const DampingSpec& spec, double x) {
  const double a = std::abs(x);
  switch (spec.kind) {
    case DampingKind::clamp: return a < spec.level ? 1.0 : 0.0;
    case DampingKind::tanh: {
      const double c = std::cosh(a / spec.level);
      return std::isfinite(c) ? 1.0 / (c * c) : 0.0;
    }
    case DampingKind::arctan: {
      const double u = a / spec.level;
      return 1.0 / (1.0 + u * u);
    }
    case DampingKind::weak: {
      if (a == 0.0) return kDerivativeCap;
      return std::min(spec.gain * spec.exponent * std::pow(a, spec.exponent - 1.0),
                      kDerivativeCap);
    }
    case DampingKind::linear: return spec.gain;
    case DampingKind::norm_saturation: break;
  }
  return 1.0;
}

// Norm used inside h: sup for componentwise kinds, Euclidean otherwise.
double s_norm(const DampingSpec& spec, const Vector& s) {
  if (s.size() == 0) return 0.0;
  return spec.componentwise() ? s.cwiseAbs().maxCoeff() : s.norm();
}

// Dual norm on the left of the sector inequality.
double s_dual_norm(const DampingSpec& spec, const Vector& s) {
  return spec.componentwise() ? s.cwiseAbs().sum() : s.norm();
}

Vector random_in_ball(std::mt19937_64& rng, Eigen::Index dim, double radius) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal(rng);
  const double n = v.norm();
  if (n == 0.0) return v;
  const double rho = radius * std::pow(uniform(rng), 1.0 / static_cast<double>(dim));
  return v * (rho / n);
}

// Gaussian direction with log-uniform magnitude in [1e-3, 1e3].
Vector random_multiscale(std::mt19937_64& rng, Eigen::Index dim) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> expo(-3.0, 3.0);
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal(rng);
  const double n = v.norm();
  if (n == 0.0) return v;
  return v * (std::pow(10.0, expo(rng)) / n);
}

}  // namespace

std::string_view to_string(DampingKind kind) {
  switch (kind) {
    case DampingKind::linear: return "linear";
    case DampingKind::norm_saturation: return "norm_saturation";
    case DampingKind::clamp: return "clamp";
    case DampingKind::tanh: return "tanh";
    case DampingKind::arctan: return "arctan";
    case DampingKind::weak: return "weak";
  }
  return "unknown";
}

std::optional<DampingKind> parse_damping_kind(std::string_view name) {
  for (DampingKind k : {DampingKind::linear, DampingKind::norm_saturation,
                        DampingKind::clamp, DampingKind::tanh,
                        DampingKind::arctan, DampingKind::weak}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

HFunction HFunction::constant(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::InvalidArgument, "constant h must be positive");
  }
  HFunction h;
  h.form_ = Form::constant;
  h.value_ = value;
  return h;
}

HFunction HFunction::power(double exponent) {
  if (!std::isfinite(exponent)) {
    throw Error(ErrorCode::InvalidArgument, "h exponent must be finite");
  }
  HFunction h;
  h.form_ = Form::power;
  h.value_ = 1.0;
  h.exponent_ = exponent;
  return h;
}

HFunction HFunction::table(std::vector<std::pair<double, double>> knots) {
  if (knots.empty()) {
    throw Error(ErrorCode::InvalidArgument, "h table needs at least one knot");
  }
  std::sort(knots.begin(), knots.end());
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const auto [x, y] = knots[i];
    if (!std::isfinite(x) || !std::isfinite(y) || x < 0.0 || !(y > 0.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  "h table knots need x >= 0 and h > 0");
    }
    if (i > 0 && x == knots[i - 1].first) {
      throw Error(ErrorCode::InvalidArgument, "duplicate h table abscissa");
    }
  }
  HFunction h;
  h.form_ = Form::table;
  h.knots_ = std::move(knots);
  return h;
}

double HFunction::operator()(double x) const {
  if (!(x >= 0.0)) {
    throw Error(ErrorCode::DomainError, "h evaluated at negative argument");
  }
  switch (form_) {
    case Form::constant: return value_;
    case Form::power:
      if (x == 0.0) {
        if (exponent_ < 0.0) {
          throw Error(ErrorCode::DomainError, "h is unbounded at 0");
        }
        return exponent_ == 0.0 ? 1.0 : 0.0;
      }
      return std::pow(x, exponent_);
    case Form::table: {
      if (x <= knots_.front().first) return knots_.front().second;
      if (x >= knots_.back().first) return knots_.back().second;
      auto it = std::upper_bound(
          knots_.begin(), knots_.end(), x,
          [](double v, const std::pair<double, double>& k) { return v < k.first; });
      const auto& [x1, y1] = *it;
      const auto& [x0, y0] = *(it - 1);
      return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    }
  }
  return value_;
}

bool HFunction::nondecreasing() const {
  switch (form_) {
    case Form::constant: return true;
    case Form::power: return exponent_ >= 0.0;
    case Form::table:
      for (std::size_t i = 1; i < knots_.size(); ++i) {
        if (knots_[i].second < knots_[i - 1].second) return false;
      }
      return true;
  }
  return true;
}

DampingSpec DampingSpec::make(DampingKind kind, double level, double gain,
                              double q) {
  DampingSpec s;
  s.kind = kind;
  s.level = level;
  s.gain = gain;
  s.exponent = q;
  switch (kind) {
    case DampingKind::linear:
      s.C1 = gain;
      s.C2 = 1.0;
      s.h = HFunction::constant(1.0);
      break;
    case DampingKind::weak:
      s.C1 = gain;
      s.C2 = 1.0;
      s.h = HFunction::power(q - 1.0);
      break;
    default:
      // |sat(x) - x| <= x sat(x) / s0 for all three scalar saturations.
      s.C1 = 1.0;
      s.C2 = level > 0.0 ? 1.0 / level : 1.0;
      s.h = HFunction::constant(1.0);
      break;
  }
  return s;
}

DampingSpec DampingSpec::linear(double gain) {
  return make(DampingKind::linear, 1.0, gain, 0.5);
}
DampingSpec DampingSpec::norm_saturation(double level) {
  return make(DampingKind::norm_saturation, level, 1.0, 0.5);
}
DampingSpec DampingSpec::clamp(double level) {
  return make(DampingKind::clamp, level, 1.0, 0.5);
}
DampingSpec DampingSpec::tanh(double level) {
  return make(DampingKind::tanh, level, 1.0, 0.5);
}
DampingSpec DampingSpec::arctan(double level) {
  return make(DampingKind::arctan, level, 1.0, 0.5);
}
DampingSpec DampingSpec::weak(double gain, double q) {
  return make(DampingKind::weak, 1.0, gain, q);
}

bool DampingSpec::componentwise() const {
  return kind == DampingKind::clamp || kind == DampingKind::tanh ||
         kind == DampingKind::arctan || kind == DampingKind::weak;
}

double DampingSpec::bound() const {
  switch (kind) {
    case DampingKind::clamp:
    case DampingKind::tanh:
    case DampingKind::norm_saturation: return level;
    case DampingKind::arctan: return level * M_PI / 2.0;
    default: return kInf;
  }
}

void validate(const DampingSpec& spec) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::InvalidArgument, msg);
  };
  if (!(spec.C1 > 0.0) || !std::isfinite(spec.C1)) fail("C1 must be positive");
  if (!(spec.C2 > 0.0) || !std::isfinite(spec.C2)) fail("C2 must be positive");
  switch (spec.kind) {
    case DampingKind::norm_saturation:
    case DampingKind::clamp:
    case DampingKind::tanh:
    case DampingKind::arctan:
      if (!(spec.level > 0.0) || !std::isfinite(spec.level)) {
        fail("saturation level must be positive");
      }
      break;
    case DampingKind::weak:
      if (!(spec.exponent > 0.0 && spec.exponent < 1.0)) {
        fail("weak damping exponent q must lie in (0, 1)");
      }
      [[fallthrough]];
    case DampingKind::linear:
      if (!(spec.gain >= 0.0) || !std::isfinite(spec.gain)) {
        fail("gain must be nonnegative");
      }
      break;
  }
}

Vector apply(const DampingSpec& spec, const Vector& s) {
  return apply(spec, s, InnerProduct::identity(std::max<Eigen::Index>(s.size(), 1)));
}

Vector apply(const DampingSpec& spec, const Vector& s, const InnerProduct& u) {
  if (spec.kind == DampingKind::norm_saturation) {
    if (s.size() == 0) return s;
    const double n = u.norm(s);
    if (n <= spec.level) return s;
    return s * (spec.level / n);
  }
  Vector out(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    out(i) = sign(s(i)) * scalar_magnitude(spec, std::abs(s(i)));
  }
  return out;
}

Matrix jacobian(const DampingSpec& spec, const Vector& s, const InnerProduct& u) {
  const Eigen::Index m = s.size();
  if (spec.kind == DampingKind::norm_saturation) {
    const double n = u.norm(s);
    Matrix J = Matrix::Identity(m, m);
    if (n <= spec.level) return J;
    // d/ds (s0 s / |s|_U) = (s0/|s|)(I - s s^T W / |s|^2)
    const Vector ws = u.weight() * s;
    J -= (s * ws.transpose()) / (n * n);
    return (spec.level / n) * J;
  }
  Matrix J = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) J(i, i) = scalar_derivative(spec, s(i));
  return J;
}

double h_eval(const DampingSpec& spec, double x) { return spec.h(x); }

const DampingCheck* DampingReport::find(std::string_view item) const {
  for (const auto& c : checks) {
    if (c.item == item) return &c;
  }
  return nullptr;
}

bool DampingReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const DampingCheck& c) { return c.pass; });
}

std::string DampingReport::render_text() const {
  std::ostringstream os;
  os << "damping_report\n";
  os << "  kind = " << to_string(spec.kind) << "\n";
  os << "  level = " << format_double(spec.level) << "\n";
  os << "  gain = " << format_double(spec.gain) << "\n";
  os << "  exponent = " << format_double(spec.exponent) << "\n";
  os << "  C1 = " << format_double(spec.C1) << "\n";
  os << "  C2 = " << format_double(spec.C2) << "\n";
  os << "  dim = " << dim << "\n";
  os << "  trials = " << trials << "\n";
  os << "  seed = " << seed << "\n";
  os << "  h_singular_at_zero = " << (h_singular_at_zero ? "true" : "false") << "\n";
  os << "  inf_sat_floor = " << format_double(inf_sat_floor) << "\n";
  for (const auto& c : checks) {
    os << "  " << c.item << ": margin = " << format_double(c.margin)
       << (c.pass ? " PASS" : " FAIL") << "\n";
  }
  os << "  overall = " << (all_pass() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

DampingReport verify_definition(const DampingSpec& spec, int dim, int trials,
                                std::uint64_t seed) {
  validate(spec);
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "dim must be >= 1");
  if (trials < 100) throw Error(ErrorCode::InvalidArgument, "trials must be >= 100");

  DampingReport report;
  report.spec = spec;
  report.dim = dim;
  report.trials = trials;
  report.seed = seed;
  report.h_singular_at_zero = spec.h.singular_at_zero();
  report.inf_sat_floor = report.h_singular_at_zero ? 1e-6 : 0.0;

  const InnerProduct u = InnerProduct::identity(dim);
  std::mt19937_64 rng(seed);

  // (a) local Lipschitz ratio per ball.
  for (double radius : {0.1, 1.0, 10.0}) {
    double ratio = 0.0;
    for (int t = 0; t < trials; ++t) {
      const Vector s1 = random_in_ball(rng, dim, radius);
      const Vector s2 = random_in_ball(rng, dim, radius);
      const double d = (s1 - s2).norm();
      if (d == 0.0) continue;
      ratio = std::max(ratio, (apply(spec, s1, u) - apply(spec, s2, u)).norm() / d);
    }
    std::ostringstream name;
    name << "lipschitz_r" << radius;
    report.checks.push_back({name.str(), ratio, std::isfinite(ratio)});
  }

  // (b) monotonicity.
  double mono = kInf;
  for (int t = 0; t < trials; ++t) {
    const Vector s1 = random_multiscale(rng, dim);
    const Vector s2 = random_multiscale(rng, dim);
    mono = std::min(mono, u.dot(apply(spec, s1, u) - apply(spec, s2, u), s1 - s2));
  }
  report.checks.push_back({"monotonicity", mono + 0.0, mono >= -1e-12});  // + 0.0 drops -0

  // (c) sector inequality.
  double sector = kInf;
  int evaluated = 0;
  for (int t = 0; t < trials; ++t) {
    const Vector s = random_multiscale(rng, dim);
    const double ns = s_norm(spec, s);
    if (ns < report.inf_sat_floor || ns == 0.0) continue;
    const Vector sig = apply(spec, s, u);
    const double margin = spec.C2 * spec.h(ns) * u.dot(sig, s) -
                          s_dual_norm(spec, sig - spec.C1 * s);
    sector = std::min(sector, margin);
    ++evaluated;
  }
  if (evaluated == 0) sector = 0.0;
  report.checks.push_back({"inf_sat", sector, sector >= -1e-12});

  // h itself: positive and finite at 0, nondecreasing on a log grid.
  double h0 = kInf;
  try {
    h0 = spec.h(0.0);
  } catch (const Error&) {
  }
  report.checks.push_back({"h_at_zero", h0, std::isfinite(h0) && h0 > 0.0});

  double worst_drop = 0.0;
  double prev = spec.h(1e-6);
  for (int i = 1; i <= 120; ++i) {
    const double x = std::pow(10.0, -6.0 + 12.0 * i / 120.0);
    const double hx = spec.h(x);
    worst_drop = std::max(worst_drop, prev - hx);
    prev = hx;
  }
  report.checks.push_back({"h_nondecreasing", 0.0 - worst_drop, worst_drop <= 0.0});

  if (spec.kind == DampingKind::weak) {
    double dev = 0.0;
    for (int i = 0; i <= 120; ++i) {
      const double x = std::pow(10.0, -6.0 + 12.0 * i / 120.0);
      const double ref = std::pow(x, spec.exponent - 1.0);
      dev = std::max(dev, std::abs(spec.h(x) - ref) / ref);
    }
    report.checks.push_back({"h_power_law", dev, dev <= 1e-12});
  }
  return report;
}

}  // namespace dampcert
