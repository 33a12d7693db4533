#include "dampcert/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "dampcert/errors.hpp"
#include "dampcert/io.hpp"

namespace dampcert {

namespace {

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
};

using Sections = std::map<std::string, std::vector<Entry>>;

std::string strip_comment(std::string_view line) {
  const auto pos = line.find('#');
  return std::string(trim(line.substr(0, pos)));
}

Sections tokenize(std::string_view text) {
  Sections sections;
  std::string current;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_comment(raw);
    if (line.empty()) continue;
    auto fail = [&](const std::string& msg) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + msg);
    };
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      const std::string name(trim(std::string_view(line).substr(1, line.size() - 2)));
      if (name.empty()) fail("empty section name");
      current = name;
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected `key = value`");
    if (current.empty()) fail("key outside any section");
    const std::string key(trim(std::string_view(line).substr(0, eq)));
    const std::string value(trim(std::string_view(line).substr(eq + 1)));
    if (key.empty()) fail("empty key");
    sections[current].push_back({key, value, line_no});
  }
  return sections;
}

// Collects semantic problems so they can be reported together.
class Validator {
 public:
  void add(int line, const std::string& key, const std::string& msg) {
    problems_.push_back("line " + std::to_string(line) + ": " + key + ": " + msg);
  }
  void add_global(const std::string& msg) { problems_.push_back(msg); }

  // Runs `fn`, recording a ParseError from a value conversion as a problem.
  template <class Fn>
  void guard(const Entry& e, Fn&& fn) {
    try {
      fn();
    } catch (const Error& err) {
      add(e.line, e.key, err.what());
    }
  }

  void finish() const {
    if (problems_.empty()) return;
    std::string msg = std::to_string(problems_.size()) + " validation error(s)";
    for (const auto& p : problems_) msg += "\n  " + p;
    throw Error(ErrorCode::ValidationError, msg);
  }

 private:
  std::vector<std::string> problems_;
};

std::vector<std::string> list_items(std::string_view v) {
  std::vector<std::string> out;
  for (const auto& item : split(v, ',')) {
    const auto t = trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::vector<std::string> words(std::string_view v) {
  std::vector<std::string> out;
  std::istringstream in{std::string(v)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::vector<double> number_list(std::string_view v, std::string_view what) {
  std::vector<double> out;
  for (const auto& item : list_items(v)) out.push_back(parse_double(item, what));
  return out;
}

// Rows separated by ';', entries by ',' or whitespace.
Matrix parse_matrix_value(std::string_view v, std::string_view what) {
  std::vector<std::vector<double>> rows;
  for (const auto& row : split(v, ';')) {
    std::string r(row);
    for (char& c : r) {
      if (c == ',') c = ' ';
    }
    std::vector<double> vals;
    for (const auto& w : words(r)) vals.push_back(parse_double(w, what));
    if (!vals.empty()) rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw Error(ErrorCode::ParseError, "empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) {
      throw Error(ErrorCode::ParseError, "matrix rows have different lengths");
    }
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

bool parse_bool(std::string_view v) {
  if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
  if (v == "off" || v == "false" || v == "no" || v == "0") return false;
  throw Error(ErrorCode::ParseError, "expected on/off, got `" + std::string(v) + "`");
}

AProfile parse_profile(std::string_view v) {
  const auto w = words(v);
  if (w.size() == 2 && w[0] == "constant") {
    return AProfile::constant(parse_double(w[1], "a_profile value"));
  }
  if (w.size() == 4 && w[0] == "indicator") {
    return AProfile::indicator(parse_double(w[1], "indicator lo"),
                               parse_double(w[2], "indicator hi"),
                               parse_double(w[3], "indicator amplitude"));
  }
  throw Error(ErrorCode::ParseError,
              "expected `constant c` or `indicator lo hi amplitude`");
}

// h = constant v | power e | table x1 h1, x2 h2, ...
HFunction parse_h(std::string_view v) {
  const auto w = words(v);
  if (w.size() == 2 && w[0] == "constant") {
    return HFunction::constant(parse_double(w[1], "h value"));
  }
  if (w.size() == 2 && w[0] == "power") {
    return HFunction::power(parse_double(w[1], "h exponent"));
  }
  if (!w.empty() && w[0] == "table") {
    const auto rest = trim(v.substr(v.find("table") + 5));
    std::vector<std::pair<double, double>> knots;
    for (const auto& item : list_items(rest)) {
      const auto xy = words(item);
      if (xy.size() != 2) throw Error(ErrorCode::ParseError, "table knot must be `x h`");
      knots.emplace_back(parse_double(xy[0], "knot x"), parse_double(xy[1], "knot h"));
    }
    return HFunction::table(std::move(knots));
  }
  throw Error(ErrorCode::ParseError, "expected `constant v`, `power e` or `table x h, ...`");
}

InitialState parse_z0(std::string_view v) {
  const auto w = words(v);
  InitialState z;
  if (w.size() == 3 && w[0] == "eigvec") {
    z.form = InitialState::Form::eigvec;
    z.index = static_cast<int>(parse_int(w[1], "eigvec index"));
    z.scale = parse_double(w[2], "eigvec scale");
    if (z.index < 0) throw Error(ErrorCode::ParseError, "eigvec index must be >= 0");
    return z;
  }
  if (w.size() == 2 && w[0] == "file") {
    z.form = InitialState::Form::file;
    z.path = w[1];
    return z;
  }
  if (w.size() >= 2 && w[0] == "values") {
    z.form = InitialState::Form::values;
    const auto rest = trim(v.substr(v.find("values") + 6));
    for (const auto& item : list_items(rest)) {
      for (const auto& x : words(item)) z.values.push_back(parse_double(x, "z0 value"));
    }
    return z;
  }
  throw Error(ErrorCode::ParseError,
              "expected `eigvec index scale`, `file path` or `values v1, v2, ...`");
}

std::string matrix_value(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out += "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ", ";
      out += format_double(m(i, j));
    }
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

std::string join_numbers(const std::vector<double>& xs) {
  std::vector<std::string> s;
  for (double x : xs) s.push_back(format_double(x));
  return join(s);
}

bool same_matrix(const std::optional<Matrix>& a, const std::optional<Matrix>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return a->rows() == b->rows() && a->cols() == b->cols() && *a == *b;
}

const std::set<std::string> kFits{"exponential", "polynomial", "linear_phase"};
const std::set<std::string> kFormats{"csv", "gnuplot"};

}  // namespace

DampingSpec DampingConfig::spec() const {
  DampingSpec s = DampingSpec::make(kind, level, gain, q);
  if (C1) s.C1 = *C1;
  if (C2) s.C2 = *C2;
  if (h) s.h = *h;
  return s;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  const auto& s = a.system;
  const auto& t = b.system;
  if (s.name != t.name || !same_matrix(s.A, t.A) || !same_matrix(s.B, t.B) || s.k != t.k ||
      s.L != t.L || s.N != t.N || !(s.a == t.a) || s.S != t.S ||
      s.check_controllability != t.check_controllability) {
    return false;
  }
  const auto& d = a.damping;
  const auto& e = b.damping;
  if (d.kind != e.kind || d.level != e.level || d.gain != e.gain || d.q != e.q ||
      d.C1 != e.C1 || d.C2 != e.C2 || d.h != e.h) {
    return false;
  }
  const auto& m = a.sim;
  const auto& n = b.sim;
  if (m.dt != n.dt || m.t_end != n.t_end || m.error_control != n.error_control ||
      m.target != n.target || m.smooth != n.smooth || m.z0.form != n.z0.form ||
      m.z0.index != n.z0.index || m.z0.scale != n.z0.scale || m.z0.path != n.z0.path ||
      m.z0.values != n.z0.values) {
    return false;
  }
  const auto& x = a.analysis;
  const auto& y = b.analysis;
  if (x.fits != y.fits || x.radii != y.radii || x.certificate != y.certificate ||
      x.r != y.r || x.gamma != y.gamma || x.C_theta != y.C_theta || x.c_S != y.c_S ||
      x.trials != y.trials || x.dim != y.dim) {
    return false;
  }
  return a.output.directory == b.output.directory && a.output.formats == b.output.formats;
}

ExperimentConfig parse_config(std::string_view text) {
  const Sections sections = tokenize(text);
  ExperimentConfig cfg;
  Validator v;

  for (const auto& [name, entries] : sections) {
    if (name != "system" && name != "damping" && name != "sim" && name != "analysis" &&
        name != "output") {
      const int line = entries.empty() ? 0 : entries.front().line;
      v.add(line, "[" + name + "]", "unknown section");
    }
    std::set<std::string> seen;
    for (const auto& e : entries) {
      if (!seen.insert(e.key).second) v.add(e.line, e.key, "duplicate key");
    }
  }
  for (const char* required : {"system", "damping"}) {
    if (!sections.count(required)) {
      v.add_global(std::string("missing required section [") + required + "]");
    }
  }

  std::map<std::string, int> line_of;
  auto section = [&](const std::string& name,
                     const std::map<std::string, std::function<void(const Entry&)>>& handlers) {
    const auto it = sections.find(name);
    if (it == sections.end()) return;
    for (const auto& e : it->second) {
      line_of[name + "." + e.key] = e.line;
      const auto h = handlers.find(e.key);
      if (h == handlers.end()) {
        v.add(e.line, e.key, "unknown key in [" + name + "]");
        continue;
      }
      v.guard(e, [&] { h->second(e); });
    }
  };
  auto positive = [&](const Entry& e, double x) {
    if (!(x > 0.0) || !std::isfinite(x)) v.add(e.line, e.key, "must be positive");
  };

  auto& sys = cfg.system;
  section("system", {
      {"name", [&](const Entry& e) {
         if (e.value != "finite_dim" && e.value != "kdv" && e.value != "wave") {
           v.add(e.line, e.key, "must be one of finite_dim, kdv, wave");
         }
         sys.name = e.value;
       }},
      {"A", [&](const Entry& e) { sys.A = parse_matrix_value(e.value, "A entry"); }},
      {"B", [&](const Entry& e) { sys.B = parse_matrix_value(e.value, "B entry"); }},
      {"k", [&](const Entry& e) {
         sys.k = parse_double(e.value, "k");
         positive(e, sys.k);
       }},
      {"L", [&](const Entry& e) {
         sys.L = parse_double(e.value, "L");
         positive(e, sys.L);
       }},
      {"N", [&](const Entry& e) {
         sys.N = static_cast<int>(parse_int(e.value, "N"));
         if (sys.N < 16) v.add(e.line, e.key, "must be an integer >= 16");
       }},
      {"a_profile", [&](const Entry& e) {
         sys.a = parse_profile(e.value);
         if (sys.a.value < 0.0) v.add(e.line, e.key, "value must be >= 0");
         if (sys.a.form == AProfile::Form::indicator && !(sys.a.lo < sys.a.hi)) {
           v.add(e.line, e.key, "indicator needs lo < hi");
         }
       }},
      {"S", [&](const Entry& e) {
         if (e.value == "U") {
           sys.S = NormChoice::U_euclidean;
         } else if (e.value == "sup") {
           sys.S = NormChoice::S_sup;
         } else {
           v.add(e.line, e.key, "must be U or sup");
         }
       }},
      {"check_controllability",
       [&](const Entry& e) { sys.check_controllability = parse_bool(e.value); }},
  });

  auto& dmp = cfg.damping;
  section("damping", {
      {"kind", [&](const Entry& e) {
         const auto k = parse_damping_kind(e.value);
         if (!k) {
           v.add(e.line, e.key,
                 "must be one of linear, norm_saturation, clamp, tanh, arctan, weak");
         } else {
           dmp.kind = *k;
         }
       }},
      {"level", [&](const Entry& e) {
         dmp.level = parse_double(e.value, "level");
         positive(e, dmp.level);
       }},
      {"gain", [&](const Entry& e) {
         dmp.gain = parse_double(e.value, "gain");
         positive(e, dmp.gain);
       }},
      {"q", [&](const Entry& e) {
         dmp.q = parse_double(e.value, "q");
         if (!(dmp.q > 0.0 && dmp.q <= 1.0)) v.add(e.line, e.key, "must be in (0, 1]");
       }},
      {"C1", [&](const Entry& e) {
         dmp.C1 = parse_double(e.value, "C1");
         positive(e, *dmp.C1);
       }},
      {"C2", [&](const Entry& e) {
         dmp.C2 = parse_double(e.value, "C2");
         positive(e, *dmp.C2);
       }},
      {"h", [&](const Entry& e) { dmp.h = parse_h(e.value); }},
  });

  auto& sim = cfg.sim;
  section("sim", {
      {"dt", [&](const Entry& e) {
         sim.dt = parse_double(e.value, "dt");
         positive(e, sim.dt);
       }},
      {"t_end", [&](const Entry& e) {
         sim.t_end = parse_double(e.value, "t_end");
         positive(e, sim.t_end);
       }},
      {"error_control", [&](const Entry& e) { sim.error_control = parse_bool(e.value); }},
      {"target", [&](const Entry& e) {
         sim.target = parse_double(e.value, "target");
         positive(e, sim.target);
       }},
      {"z0", [&](const Entry& e) { sim.z0 = parse_z0(e.value); }},
      {"smooth", [&](const Entry& e) { sim.smooth = parse_bool(e.value); }},
  });

  auto& an = cfg.analysis;
  section("analysis", {
      {"fits", [&](const Entry& e) {
         an.fits = list_items(e.value);
         for (const auto& f : an.fits) {
           if (!kFits.count(f)) {
             v.add(e.line, e.key, "unknown fit `" + f +
                                      "` (expected exponential, polynomial, linear_phase)");
           }
         }
       }},
      {"radii", [&](const Entry& e) {
         an.radii = number_list(e.value, "radius");
         for (double r : an.radii) {
           if (!(r > 0.0)) v.add(e.line, e.key, "radii must be positive");
         }
       }},
      {"certificate", [&](const Entry& e) {
         const auto k = parse_certificate_kind(e.value);
         if (!k) {
           v.add(e.line, e.key,
                 "must be one of global_exp_SU, semiglobal_exp_SneqU, semiglobal_poly, "
                 "finite_dim");
         } else {
           an.certificate = *k;
         }
       }},
      {"r", [&](const Entry& e) {
         an.r = parse_double(e.value, "r");
         positive(e, *an.r);
       }},
      {"gamma", [&](const Entry& e) {
         an.gamma = parse_double(e.value, "gamma");
         if (!(*an.gamma > 0.5)) v.add(e.line, e.key, "must be > 0.5");
       }},
      {"C_theta", [&](const Entry& e) {
         an.C_theta = parse_double(e.value, "C_theta");
         positive(e, *an.C_theta);
       }},
      {"c_S", [&](const Entry& e) {
         an.c_S = parse_double(e.value, "c_S");
         positive(e, *an.c_S);
       }},
      {"trials", [&](const Entry& e) {
         an.trials = static_cast<int>(parse_int(e.value, "trials"));
         if (an.trials < 100) v.add(e.line, e.key, "must be >= 100");
       }},
      {"dim", [&](const Entry& e) {
         an.dim = static_cast<int>(parse_int(e.value, "dim"));
         if (an.dim < 0) v.add(e.line, e.key, "must be >= 0");
       }},
  });

  auto& out = cfg.output;
  section("output", {
      {"directory", [&](const Entry& e) {
         if (e.value.empty()) v.add(e.line, e.key, "must not be empty");
         out.directory = e.value;
       }},
      {"formats", [&](const Entry& e) {
         out.formats = list_items(e.value);
         for (const auto& f : out.formats) {
           if (!kFormats.count(f)) v.add(e.line, e.key, "unknown format `" + f + "`");
         }
       }},
  });

  // Cross-field checks.
  auto line = [&](const std::string& key) {
    const auto it = line_of.find(key);
    return it == line_of.end() ? 0 : it->second;
  };
  if (sys.name == "finite_dim") {
    if (!sys.A) v.add(line("system.name"), "A", "required for finite_dim");
    if (!sys.B) v.add(line("system.name"), "B", "required for finite_dim");
    if (sys.A && sys.A->rows() != sys.A->cols()) {
      v.add(line("system.A"), "A", "must be square");
    }
    if (sys.A && sys.B && sys.B->rows() != sys.A->rows()) {
      v.add(line("system.B"), "B", "must have as many rows as A");
    }
  }
  if (sim.z0.form == InitialState::Form::eigvec && !(std::isfinite(sim.z0.scale))) {
    v.add(line("sim.z0"), "z0", "scale must be finite");
  }
  if (sim.dt > sim.t_end) v.add(line("sim.dt"), "dt", "must not exceed t_end");

  v.finish();
  return cfg;
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  const auto& s = c.system;
  os << "[system]\n";
  os << "name = " << s.name << "\n";
  if (s.A) os << "A = " << matrix_value(*s.A) << "\n";
  if (s.B) os << "B = " << matrix_value(*s.B) << "\n";
  os << "k = " << format_double(s.k) << "\n";
  os << "L = " << format_double(s.L) << "\n";
  os << "N = " << s.N << "\n";
  if (s.a.form == AProfile::Form::constant) {
    os << "a_profile = constant " << format_double(s.a.value) << "\n";
  } else {
    os << "a_profile = indicator " << format_double(s.a.lo) << " " << format_double(s.a.hi)
       << " " << format_double(s.a.value) << "\n";
  }
  if (s.S) os << "S = " << (*s.S == NormChoice::U_euclidean ? "U" : "sup") << "\n";
  os << "check_controllability = " << (s.check_controllability ? "on" : "off") << "\n";

  const auto& d = c.damping;
  os << "\n[damping]\n";
  os << "kind = " << to_string(d.kind) << "\n";
  os << "level = " << format_double(d.level) << "\n";
  os << "gain = " << format_double(d.gain) << "\n";
  os << "q = " << format_double(d.q) << "\n";
  if (d.C1) os << "C1 = " << format_double(*d.C1) << "\n";
  if (d.C2) os << "C2 = " << format_double(*d.C2) << "\n";
  if (d.h) {
    switch (d.h->form()) {
      case HFunction::Form::constant:
        os << "h = constant " << format_double(d.h->value()) << "\n";
        break;
      case HFunction::Form::power:
        os << "h = power " << format_double(d.h->exponent()) << "\n";
        break;
      case HFunction::Form::table: {
        std::vector<std::string> knots;
        for (const auto& [x, h] : d.h->knots()) {
          knots.push_back(format_double(x) + " " + format_double(h));
        }
        os << "h = table " << join(knots) << "\n";
        break;
      }
    }
  }

  const auto& m = c.sim;
  os << "\n[sim]\n";
  os << "dt = " << format_double(m.dt) << "\n";
  os << "t_end = " << format_double(m.t_end) << "\n";
  os << "error_control = " << (m.error_control ? "on" : "off") << "\n";
  os << "target = " << format_double(m.target) << "\n";
  switch (m.z0.form) {
    case InitialState::Form::eigvec:
      os << "z0 = eigvec " << m.z0.index << " " << format_double(m.z0.scale) << "\n";
      break;
    case InitialState::Form::file:
      os << "z0 = file " << m.z0.path << "\n";
      break;
    case InitialState::Form::values:
      os << "z0 = values " << join_numbers(m.z0.values) << "\n";
      break;
  }
  os << "smooth = " << (m.smooth ? "on" : "off") << "\n";

  const auto& a = c.analysis;
  os << "\n[analysis]\n";
  os << "fits = " << join(a.fits) << "\n";
  if (!a.radii.empty()) os << "radii = " << join_numbers(a.radii) << "\n";
  if (a.certificate) os << "certificate = " << to_string(*a.certificate) << "\n";
  if (a.r) os << "r = " << format_double(*a.r) << "\n";
  if (a.gamma) os << "gamma = " << format_double(*a.gamma) << "\n";
  if (a.C_theta) os << "C_theta = " << format_double(*a.C_theta) << "\n";
  if (a.c_S) os << "c_S = " << format_double(*a.c_S) << "\n";
  os << "trials = " << a.trials << "\n";
  os << "dim = " << a.dim << "\n";

  os << "\n[output]\n";
  os << "directory = " << c.output.directory << "\n";
  os << "formats = " << join(c.output.formats) << "\n";
  return os.str();
}

SemiDiscreteSystem build_system(const ExperimentConfig& config) {
  const auto& s = config.system;
  if (s.name == "finite_dim") {
    if (!s.A || !s.B) throw Error(ErrorCode::ValidationError, "finite_dim needs A and B");
    return make_finite_dim(*s.A, *s.B, s.k, s.check_controllability);
  }
  const AProfile a = s.a;
  const auto fn = [a](double x) { return a(x); };
  const NormChoice S = s.S.value_or(NormChoice::S_sup);
  if (s.name == "kdv") return discretize_kdv(s.L, s.N, fn, s.k, S);
  if (s.name == "wave") return discretize_wave(s.N, fn, s.k, S);
  throw Error(ErrorCode::ValidationError, "unknown system `" + s.name + "`");
}

Vector build_initial_state(const ExperimentConfig& config, const SemiDiscreteSystem& system,
                           const std::string& base_dir) {
  const auto& z0 = config.sim.z0;
  Vector z;
  switch (z0.form) {
    case InitialState::Form::values:
      z = Eigen::Map<const Vector>(z0.values.data(), static_cast<Eigen::Index>(z0.values.size()));
      break;
    case InitialState::Form::file: {
      std::filesystem::path p(z0.path);
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      const Matrix m = read_matrix_file(p);
      if (m.cols() != 1) throw Error(ErrorCode::InvalidArgument, "z0 file must be n x 1");
      z = m.col(0);
      break;
    }
    case InitialState::Form::eigvec: {
      const Matrix At = system.closed_loop(config.damping.spec().C1);
      Eigen::EigenSolver<Matrix> es(At);
      if (es.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularSystem, "eigen decomposition failed");
      }
      const auto& vals = es.eigenvalues();
      std::vector<Eigen::Index> order(static_cast<std::size_t>(vals.size()));
      for (Eigen::Index i = 0; i < vals.size(); ++i) order[static_cast<std::size_t>(i)] = i;
      std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
        const double ai = std::abs(vals[i]);
        const double aj = std::abs(vals[j]);
        if (ai != aj) return ai < aj;
        return vals[i].imag() > vals[j].imag();
      });
      if (z0.index >= static_cast<int>(order.size())) {
        throw Error(ErrorCode::InvalidArgument, "eigvec index out of range");
      }
      Vector v = es.eigenvectors().col(order[static_cast<std::size_t>(z0.index)]).real();
      if (system.norm_H(v) == 0.0) {
        v = es.eigenvectors().col(order[static_cast<std::size_t>(z0.index)]).imag();
      }
      Eigen::Index imax = 0;
      v.cwiseAbs().maxCoeff(&imax);
      if (v[imax] < 0.0) v = -v;
      z = z0.scale * v / system.norm_H(v);
      break;
    }
  }
  if (z.size() != system.dim()) {
    throw Error(ErrorCode::InvalidArgument,
                "z0 has dimension " + std::to_string(z.size()) + ", system has " +
                    std::to_string(system.dim()));
  }
  if (config.sim.smooth) z = smooth_initial_state(system, z);
  return z;
}

IntegratorConfig integrator_config(const ExperimentConfig& config) {
  IntegratorConfig ic;
  ic.dt = config.sim.dt;
  ic.t_end = config.sim.t_end;
  ic.error_control = config.sim.error_control;
  ic.target = config.sim.target;
  ic.store_states = false;
  return ic;
}

}  // namespace dampcert
