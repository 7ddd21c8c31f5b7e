#pragma once
/**
 * @file experiments.hpp
 * @brief Convergence studies for the flat and spherical membrane problems,
 * their configuration format, CSV output and the assumption probe suite.
 *
 * Config files are flat `key = value` text, one key per line, `#` starts a
 * comment. Recognised keys:
 *
 *   experiment   flat-lagrange | sphere-fixed-eps | penalty-sweep | coupled-sweep | probes
 *   levels       k | a-b | a..b
 *   epsilon      none | <value> | fixed:<value> | geometric[:eps0,ratio,count] | coupled[:C]
 *   quad_degree  1..6
 *   constraint   lagrange | penalty
 *   output       path of the CSV (or probe report) to write
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sosfem/error.hpp"
#include "sosfem/error_metrics.hpp"
#include "sosfem/mesh.hpp"
#include "sosfem/p1.hpp"
#include "sosfem/probes.hpp"
#include "sosfem/problems.hpp"
#include "sosfem/saddle.hpp"

namespace sosfem {

enum class ExperimentKind { FlatLagrange, SphereFixedEps, PenaltySweep, CoupledSweep, Probes };

inline std::string experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::FlatLagrange: return "flat-lagrange";
    case ExperimentKind::SphereFixedEps: return "sphere-fixed-eps";
    case ExperimentKind::PenaltySweep: return "penalty-sweep";
    case ExperimentKind::CoupledSweep: return "coupled-sweep";
    case ExperimentKind::Probes: return "probes";
  }
  return "?";
}

inline ExperimentKind parse_experiment_name(const std::string& s) {
  for (auto k : {ExperimentKind::FlatLagrange, ExperimentKind::SphereFixedEps,
                 ExperimentKind::PenaltySweep, ExperimentKind::CoupledSweep, ExperimentKind::Probes})
    if (experiment_name(k) == s) return k;
  throw ConfigError("unknown experiment '" + s + "'");
}

struct EpsilonSchedule {
  enum class Kind { None, Fixed, Geometric, Coupled };
  Kind kind = Kind::None;
  double value = 0.0;  // fixed epsilon, or the first epsilon of a geometric sequence
  double ratio = 0.5;
  int count = 5;
  std::optional<double> coupling;  // C in eps = C h^2; chosen from the coarsest level if unset

  static EpsilonSchedule none() { return {}; }
  static EpsilonSchedule fixed(double eps) { return {Kind::Fixed, eps, 0.5, 1, std::nullopt}; }
  static EpsilonSchedule geometric(double eps0 = 0.2, double ratio = 0.5, int count = 5) {
    return {Kind::Geometric, eps0, ratio, count, std::nullopt};
  }
  static EpsilonSchedule coupled(std::optional<double> c = std::nullopt) {
    return {Kind::Coupled, 0.0, 0.5, 0, c};
  }

  std::vector<double> sequence() const {
    std::vector<double> out;
    double e = value;
    for (int k = 0; k < count; ++k, e *= ratio) out.push_back(e);
    return out;
  }
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::FlatLagrange;
  int level_min = 1;
  int level_max = 5;
  EpsilonSchedule epsilon;
  int quad_degree = 4;
  SaddleConfig::Mode constraint = SaddleConfig::Mode::Lagrange;
  std::string output;

  static ExperimentSpec defaults(ExperimentKind kind) {
    ExperimentSpec s;
    s.kind = kind;
    switch (kind) {
      case ExperimentKind::FlatLagrange:
        s.level_min = 1, s.level_max = 5;
        break;
      case ExperimentKind::SphereFixedEps:
        s.level_min = 3, s.level_max = 7;
        s.epsilon = EpsilonSchedule::fixed(kHardConstraintPenalty);
        s.constraint = SaddleConfig::Mode::Penalty;
        break;
      case ExperimentKind::PenaltySweep:
        s.level_min = s.level_max = 7;
        s.epsilon = EpsilonSchedule::geometric();
        s.constraint = SaddleConfig::Mode::Penalty;
        break;
      case ExperimentKind::CoupledSweep:
        s.level_min = 3, s.level_max = 7;
        s.epsilon = EpsilonSchedule::coupled();
        s.constraint = SaddleConfig::Mode::Penalty;
        break;
      case ExperimentKind::Probes:
        s.level_min = 0, s.level_max = 4;
        break;
    }
    return s;
  }

  void validate() const {
    if (level_min < 0 || level_max > kMaxMeshLevel || level_min > level_max)
      throw ConfigError("levels must satisfy 0 <= min <= max <= " + std::to_string(kMaxMeshLevel));
    if (quad_degree < 1 || quad_degree > 6) throw ConfigError("quad_degree must lie in 1..6");
    const auto& e = epsilon;
    if ((e.kind == EpsilonSchedule::Kind::Fixed || e.kind == EpsilonSchedule::Kind::Geometric) &&
        !(e.value > 0.0))
      throw ConfigError("epsilon must be positive");
    if (e.kind == EpsilonSchedule::Kind::Geometric && (!(e.ratio > 0.0 && e.ratio < 1.0) || e.count < 2))
      throw ConfigError("geometric epsilon needs 0 < ratio < 1 and count >= 2");
    if (e.coupling && !(*e.coupling > 0.0)) throw ConfigError("coupled constant must be positive");
    const bool penalty = constraint == SaddleConfig::Mode::Penalty;
    switch (kind) {
      case ExperimentKind::FlatLagrange:
        if (penalty && e.kind != EpsilonSchedule::Kind::Fixed)
          throw ConfigError("flat-lagrange in penalty mode needs a fixed epsilon");
        if (level_max == level_min) throw ConfigError("a refinement study needs at least two levels");
        break;
      case ExperimentKind::SphereFixedEps:
        if (penalty && e.kind != EpsilonSchedule::Kind::Fixed)
          throw ConfigError("sphere-fixed-eps needs a fixed epsilon");
        if (level_max == level_min) throw ConfigError("a refinement study needs at least two levels");
        break;
      case ExperimentKind::PenaltySweep:
        if (e.kind != EpsilonSchedule::Kind::Geometric)
          throw ConfigError("penalty-sweep needs a geometric epsilon schedule");
        if (!penalty) throw ConfigError("penalty-sweep requires constraint = penalty");
        break;
      case ExperimentKind::CoupledSweep:
        if (e.kind != EpsilonSchedule::Kind::Coupled)
          throw ConfigError("coupled-sweep needs a coupled epsilon schedule");
        if (!penalty) throw ConfigError("coupled-sweep requires constraint = penalty");
        if (level_max == level_min) throw ConfigError("a refinement study needs at least two levels");
        break;
      case ExperimentKind::Probes:
        break;
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + s + "' for key '" + key + "'");
  }
}

inline int parse_int(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer '" + s + "' for key '" + key + "'");
  }
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

inline EpsilonSchedule parse_epsilon(const std::string& raw) {
  const std::string v = trim(raw);
  const auto colon = v.find(':');
  const std::string head = v.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : v.substr(colon + 1);
  if (head == "none") return EpsilonSchedule::none();
  if (head == "fixed") {
    if (args.empty()) throw ConfigError("fixed epsilon needs a value");
    return EpsilonSchedule::fixed(parse_double(args, "epsilon"));
  }
  if (head == "geometric") {
    if (args.empty()) return EpsilonSchedule::geometric();
    const auto parts = split(args, ',');
    if (parts.size() != 3) throw ConfigError("geometric epsilon expects eps0,ratio,count");
    return EpsilonSchedule::geometric(parse_double(parts[0], "epsilon"),
                                      parse_double(parts[1], "epsilon"),
                                      parse_int(parts[2], "epsilon"));
  }
  if (head == "coupled") {
    if (args.empty()) return EpsilonSchedule::coupled();
    return EpsilonSchedule::coupled(parse_double(args, "epsilon"));
  }
  return EpsilonSchedule::fixed(parse_double(v, "epsilon"));
}

}  // namespace detail

/// Applies one configuration key. Command line overrides go through here
/// too, so both sources accept the same syntax.
inline void apply_setting(ExperimentSpec& spec, std::string key, const std::string& raw) {
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string value = detail::trim(raw);
  if (value.empty()) throw ConfigError("empty value for key '" + key + "'");
  if (key == "experiment") {
    spec = ExperimentSpec::defaults(parse_experiment_name(value));
  } else if (key == "levels") {
    std::string a = value, b = value;
    if (auto p = value.find(".."); p != std::string::npos) {
      a = value.substr(0, p), b = value.substr(p + 2);
    } else if (auto q = value.find('-', 1); q != std::string::npos) {
      a = value.substr(0, q), b = value.substr(q + 1);
    }
    spec.level_min = detail::parse_int(detail::trim(a), key);
    spec.level_max = detail::parse_int(detail::trim(b), key);
  } else if (key == "epsilon") {
    spec.epsilon = detail::parse_epsilon(value);
  } else if (key == "quad_degree") {
    spec.quad_degree = detail::parse_int(value, key);
  } else if (key == "constraint") {
    if (value == "lagrange") spec.constraint = SaddleConfig::Mode::Lagrange;
    else if (value == "penalty") spec.constraint = SaddleConfig::Mode::Penalty;
    else throw ConfigError("constraint must be lagrange or penalty");
  } else if (key == "output") {
    spec.output = value;
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

/// Parses a config stream. `experiment` must come first because it resets
/// every other key to that experiment's defaults.
inline ExperimentSpec parse_config(std::istream& in) {
  ExperimentSpec spec;
  bool have_experiment = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    if (key == "experiment") {
      if (have_experiment) throw ConfigError("line " + std::to_string(lineno) + ": duplicate experiment");
      have_experiment = true;
    } else if (!have_experiment) {
      throw ConfigError("line " + std::to_string(lineno) + ": 'experiment' must be the first key");
    }
    try {
      apply_setting(spec, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_experiment) throw ConfigError("config has no 'experiment' key");
  return spec;
}

inline ExperimentSpec parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

// ---------------------------------------------------------------------------
// Tables

/// Six significant digits in scientific notation, e.g. 4.20334e-01.
inline std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5e", v);
  return buf;
}

/// The value that format_sci prints.
inline double round_sig6(double v) { return std::stod(format_sci(v)); }

struct EOCTable {
  std::vector<std::string> provenance;  // written as "# " lines
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<double>>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    return -1;
  }
  std::optional<double> at(std::size_t row, const std::string& name) const {
    const int c = column(name);
    if (c < 0 || row >= rows.size()) return std::nullopt;
    return rows[row][static_cast<std::size_t>(c)];
  }
  std::optional<double> last(const std::string& name) const {
    if (rows.empty()) return std::nullopt;
    return at(rows.size() - 1, name);
  }

  void write_csv(std::ostream& os) const {
    for (const auto& p : provenance) os << "# " << p << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) os << ',';
        if (r[i]) os << format_sci(*r[i]);
      }
      os << '\n';
    }
  }
};

/// Errors of one solve, keyed by column name (e.g. "L2_u").
struct LevelResult {
  int level = 0;
  double h = 0.0;
  std::optional<double> epsilon;
  std::vector<std::pair<std::string, double>> errors;
};

namespace detail {

inline std::string mode_name(SaddleConfig::Mode m) {
  return m == SaddleConfig::Mode::Lagrange ? "lagrange" : "penalty";
}

inline std::string describe_epsilon(const EpsilonSchedule& e, std::optional<double> c_used) {
  std::ostringstream os;
  switch (e.kind) {
    case EpsilonSchedule::Kind::None: os << "none (hard constraints)"; break;
    case EpsilonSchedule::Kind::Fixed: os << "fixed " << format_sci(e.value); break;
    case EpsilonSchedule::Kind::Geometric:
      os << "geometric eps0=" << format_sci(e.value) << " ratio=" << e.ratio << " count=" << e.count;
      break;
    case EpsilonSchedule::Kind::Coupled:
      os << "coupled eps=C*h^2";
      if (c_used) os << " C=" << format_sci(*c_used);
      break;
  }
  return os.str();
}

inline std::string join_labels(const std::vector<std::string>& labels) {
  std::string s;
  for (std::size_t i = 0; i < labels.size(); ++i) s += (i ? " " : "") + labels[i];
  return s;
}

}  // namespace detail

inline constexpr double kWExponent = 4.0 / 3.0;

/// Solves the flat or spherical problem on one level and measures every
/// error column. `epsilon` unset means a hard (Lagrange) solve.
inline LevelResult solve_level(ProblemKind problem, int level, std::optional<double> epsilon,
                               int quad_degree) {
  const ExactFields ex = exact_fields(problem);
  const bool flat = problem == ProblemKind::Flat;
  auto space = make_space(flat ? build_disc_mesh(level) : build_octasphere(level), flat);
  const AssembledForms forms = assemble_forms(
      *space, flat ? flat_membrane_weights(1.0, 0.0) : sphere_membrane_weights(1.0, 1.0, 1.0));
  const Vector F = assemble_load(*space, ex.f, quad_degree);
  const Vector G = assemble_load(*space, ex.g, quad_degree);
  SaddleConfig cfg = epsilon ? SaddleConfig::penalty(*epsilon, ex.points, ex.Z)
                             : SaddleConfig::lagrange(ex.points, ex.Z);
  cfg = cfg.with_mean_constraints(!flat, !flat).with_dirichlet(flat);
  const SolutionBundle sol = solve_saddle(forms, space, F, G, cfg);

  LevelResult r;
  r.level = level;
  r.h = mesh_size(*space->mesh).h;
  r.epsilon = epsilon;
  const auto w1p = NormKind::w1p(kWExponent);
  r.errors.emplace_back("L2_u", fe_error_norm(sol.u, ex.u, NormKind::l2(), quad_degree).relative);
  r.errors.emplace_back("H1_u", fe_error_norm(sol.u, ex.u, NormKind::h1(), quad_degree).relative);
  r.errors.emplace_back("L2_w", fe_error_norm(sol.w, ex.w, NormKind::l2(), quad_degree).relative);
  r.errors.emplace_back("W1p_w", fe_error_norm(sol.w, ex.w, w1p, quad_degree).relative);
  const Vector& lam = sol.lambda ? *sol.lambda : *sol.multiplier_recovery;
  r.errors.emplace_back("l2_lambda", lambda_error(lam, *ex.lambda));
  if (ex.w_unshifted) {
    r.errors.emplace_back("L2_w_unshifted",
                          fe_error_norm(sol.w, *ex.w_unshifted, NormKind::l2(), quad_degree).relative);
    r.errors.emplace_back("W1p_w_unshifted",
                          fe_error_norm(sol.w, *ex.w_unshifted, w1p, quad_degree).relative);
  }
  return r;
}

/// Builds the CSV table from per-row results. EOCs are computed from the
/// rounded (printed) values so every EOC recomputes exactly from the file.
inline EOCTable tabulate(const std::vector<LevelResult>& results, bool with_epsilon,
                         bool eoc_in_epsilon) {
  static const std::vector<std::vector<std::string>> groups = {
      {"L2_u", "H1_u"}, {"L2_w", "W1p_w"}, {"l2_lambda"}};
  EOCTable t;
  t.columns.push_back("h");
  if (with_epsilon) t.columns.push_back("epsilon");
  for (const auto& g : groups) {
    for (const auto& e : g) t.columns.push_back("E_" + e);
    for (const auto& e : g) t.columns.push_back("EOC_" + e);
  }
  const bool unshifted = !results.empty() && results.front().errors.size() > 5;
  if (unshifted) {
    t.columns.push_back("E_L2_w_unshifted");
    t.columns.push_back("E_W1p_w_unshifted");
  }
  auto err = [](const LevelResult& r, const std::string& name) {
    for (const auto& [k, v] : r.errors)
      if (k == name) return round_sig6(v);
    throw Error("tabulate: missing error column " + name);
  };
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    std::vector<std::optional<double>> row;
    row.push_back(round_sig6(r.h));
    if (with_epsilon)
      row.push_back(r.epsilon ? std::optional<double>(round_sig6(*r.epsilon)) : std::nullopt);
    for (const auto& g : groups) {
      for (const auto& e : g) row.push_back(err(r, e));
      for (const auto& e : g) {
        if (i == 0) {
          row.push_back(std::nullopt);
          continue;
        }
        const auto& p = results[i - 1];
        const double x1 = round_sig6(eoc_in_epsilon ? *p.epsilon : p.h);
        const double x2 = round_sig6(eoc_in_epsilon ? *r.epsilon : r.h);
        row.push_back(eoc(err(p, e), err(r, e), x1, x2));
      }
    }
    if (unshifted) {
      row.push_back(err(r, "L2_w_unshifted"));
      row.push_back(err(r, "W1p_w_unshifted"));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Runs a convergence study. `progress`, when given, receives one line per
/// completed solve.
inline EOCTable run_experiment(const ExperimentSpec& spec,
                               const std::function<void(const std::string&)>& progress = {}) {
  spec.validate();
  if (spec.kind == ExperimentKind::Probes)
    throw ConfigError("probes are run with run_probe_suite, not run_experiment");
  const bool flat = spec.kind == ExperimentKind::FlatLagrange;
  const ProblemKind problem = flat ? ProblemKind::Flat : ProblemKind::Sphere;
  const bool penalty = spec.constraint == SaddleConfig::Mode::Penalty;

  std::vector<LevelResult> results;
  std::optional<double> c_used;
  auto record = [&](LevelResult r) {
    if (progress) {
      std::string line = "level " + std::to_string(r.level) + " h=" + format_sci(r.h);
      if (r.epsilon) line += " eps=" + format_sci(*r.epsilon);
      line += " E_L2_u=" + format_sci(r.errors.front().second);
      progress(line);
    }
    results.push_back(std::move(r));
  };

  switch (spec.kind) {
    case ExperimentKind::FlatLagrange:
    case ExperimentKind::SphereFixedEps:
      for (int l = spec.level_min; l <= spec.level_max; ++l)
        record(solve_level(problem, l, penalty ? std::optional<double>(spec.epsilon.value) : std::nullopt,
                           spec.quad_degree));
      break;
    case ExperimentKind::PenaltySweep:
      for (double eps : spec.epsilon.sequence())
        record(solve_level(problem, spec.level_max, eps, spec.quad_degree));
      break;
    case ExperimentKind::CoupledSweep: {
      const double h0 = mesh_size(build_octasphere(spec.level_min)).h;
      c_used = spec.epsilon.coupling ? *spec.epsilon.coupling : 0.2 / (h0 * h0);
      for (int l = spec.level_min; l <= spec.level_max; ++l) {
        const double h = mesh_size(build_octasphere(l)).h;
        record(solve_level(problem, l, *c_used * h * h, spec.quad_degree));
      }
      break;
    }
    case ExperimentKind::Probes:
      break;
  }

  const bool with_eps = !flat || penalty;
  EOCTable t = tabulate(results, with_eps, spec.kind == ExperimentKind::PenaltySweep);
  const ExactFields ex = exact_fields(problem);
  t.provenance.push_back("experiment: " + experiment_name(spec.kind));
  t.provenance.push_back(flat ? "mesh family: 13-vertex disc template, uniform red refinement, "
                                "boundary midpoints projected to the unit circle"
                              : "mesh family: octahedron, uniform red refinement, midpoints "
                                "projected radially to the unit sphere");
  if (spec.kind == ExperimentKind::PenaltySweep)
    t.provenance.push_back("fixed level: " + std::to_string(spec.level_max));
  else
    t.provenance.push_back("levels: " + std::to_string(spec.level_min) + "-" +
                           std::to_string(spec.level_max));
  t.provenance.push_back("quadrature degree: " + std::to_string(spec.quad_degree) +
                         " (exact fields evaluated at lifted points, facet measure)");
  t.provenance.push_back("constraint mode: " + detail::mode_name(spec.constraint));
  t.provenance.push_back("epsilon schedule: " + detail::describe_epsilon(spec.epsilon, c_used));
  if (c_used) t.provenance.push_back("coupled C: " + format_sci(*c_used));
  t.provenance.push_back("lambda ordering: " + detail::join_labels(ex.point_labels));
  t.provenance.push_back(
      flat ? "w-shift: none; exact w = -2 log r^2 + u"
           : "w-shift: exact w = log(1-x3) - (log 2 - 1) (zero mean); *_unshifted columns compare "
             "with log(1-x3)");
  t.provenance.push_back(spec.kind == ExperimentKind::PenaltySweep
                             ? "EOC variable: epsilon"
                             : "EOC variable: h (longest edge)");
  t.provenance.push_back("errors: relative; W1p uses p = 4/3; lambda error uses " +
                         std::string(penalty ? "(T u_h - Z)/eps" : "the discrete multiplier"));
  return t;
}

inline void write_table(const EOCTable& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file '" + path + "'");
  t.write_csv(out);
  if (!out) throw Error("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Probe suite

struct ProbeSuiteOptions {
  int quad_degree = 4;
  double coercivity_eps0 = 0.01;
  double residual_radius = 0.25;
};

/// Sphere experiment forms on one octasphere level.
inline std::pair<std::shared_ptr<const FESpace>, AssembledForms> sphere_setup(int level) {
  auto space = make_space(build_octasphere(level));
  AssembledForms forms = assemble_forms(*space, sphere_membrane_weights(1.0, 1.0, 1.0));
  return {space, std::move(forms)};
}

inline ScalarField height_field() {
  return {[](const Vec3& x) { return x.z(); },
          [](const Vec3& x) -> Vec3 { return Vec3::UnitZ() - x.z() * x; }, "x3"};
}

inline std::vector<ProbeReport> run_probe_suite(const ProbeSuiteOptions& opt = {},
                                                const std::function<void(const std::string&)>& progress = {}) {
  std::vector<ProbeReport> out;
  auto done = [&](ProbeReport r) {
    if (progress) progress(r.name);
    out.push_back(std::move(r));
  };
  const ExactFields sphere = sphere_problem();

  {  // idempotence: project x3, then project the projection
    auto [space, forms] = sphere_setup(2);
    const FEFunction p1 = ritz_projection(space, height_field(), opt.quad_degree);
    const FEFunction p2 = ritz_projection(p1, opt.quad_degree);
    ProbeReport r{"ritz-idempotent", {2}, {(p2.coefficients - p1.coefficients).lpNorm<Eigen::Infinity>()},
                  1e-12, "max |P(P x3) - P x3| <= threshold", false};
    r.pass = r.values[0] <= r.threshold;
    done(r);
  }
  {
    ProbeReport r{"ritz-convergence", {1, 2, 3, 4}, {}, 3.0,
                  "L2 error of the projection of x3 drops by >= threshold per level", true};
    for (int l : r.levels) {
      auto [space, forms] = sphere_setup(l);
      const FEFunction p = ritz_projection(space, height_field(), opt.quad_degree);
      r.values.push_back(fe_error_norm(p, height_field(), NormKind::l2(), opt.quad_degree).absolute);
    }
    for (std::size_t i = 1; i < r.values.size(); ++i)
      r.pass = r.pass && r.values[i - 1] / r.values[i] >= r.threshold;
    done(r);
  }
  {
    ProbeReport r{"coercivity-eps0", {1, 2, 3}, {}, 0.5,
                  "mu > 0 on every level and min/max >= threshold (eps0 = " +
                      format_sci(opt.coercivity_eps0) + ")",
                  true};
    for (int l : r.levels) {
      auto [space, forms] = sphere_setup(l);
      const SparseMatrix T = point_eval_matrix(*space, sphere.points);
      r.values.push_back(coercivity_probe(*space, forms, T, opt.coercivity_eps0));
    }
    const auto [mn, mx] = std::minmax_element(r.values.begin(), r.values.end());
    r.pass = *mn > 0.0 && *mn >= r.threshold * *mx;
    done(r);
  }
  {
    ProbeReport r{"coercivity-no-constraint", {2}, {}, 0.0,
                  "mu > threshold without the point term; failure is the expected outcome", false};
    auto [space, forms] = sphere_setup(2);
    const SparseMatrix T = point_eval_matrix(*space, sphere.points);
    r.values.push_back(coercivity_probe(*space, forms, T, std::numeric_limits<double>::infinity()));
    r.pass = r.values[0] > r.threshold;
    done(r);
  }
  {
    ProbeReport r{"coercivity-spd-c", {2}, {}, 1.0 - 1e-10, "mu >= threshold with c replaced by b",
                  false};
    auto [space, forms] = sphere_setup(2);
    AssembledForms spd = forms;
    spd.c = forms.b;
    const SparseMatrix T = point_eval_matrix(*space, sphere.points);
    r.values.push_back(coercivity_probe(*space, spd, T, opt.coercivity_eps0));
    r.pass = r.values[0] >= r.threshold;
    done(r);
  }
  {
    ProbeReport r{"infsup-uniformity", {1, 2, 3, 4}, {}, 0.5,
                  "experiment constraints (six points, both means): min/max over levels >= threshold",
                  false};
    for (int l : r.levels) {
      auto [space, forms] = sphere_setup(l);
      r.values.push_back(saddle_infsup_probe(*space, forms, sphere.points, true, true));
    }
    const auto [mn, mx] = std::minmax_element(r.values.begin(), r.values.end());
    r.pass = *mn > 0.0 && *mn >= r.threshold * *mx;
    done(r);
  }
  {
    // Four points each, both with the mean constraints. The zero-mean field
    // x3 vanishes at every equator point, so the equator set cannot control
    // it and its value decays under refinement.
    const std::vector<Vec3> spread = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(-1, 0, 0)};
    const std::vector<Vec3> equator = {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0)};
    auto [space, forms] = sphere_setup(4);
    const double good = saddle_infsup_probe(*space, forms, spread, true, true);
    const double bad = saddle_infsup_probe(*space, forms, equator, true, true);
    ProbeReport r{"infsup-coplanar", {4}, {good, bad, good / bad}, 10.0,
                  "values: non-coplanar, equator, ratio; ratio >= threshold", false};
    r.pass = good / bad >= r.threshold;
    done(r);
  }
  auto residual_report = [&](const std::string& name, ProblemKind kind, std::vector<int> levels) {
    ProbeReport r{name, levels, {}, opt.residual_radius,
                  "residual dual norm strictly decreasing (exclusion radius = threshold)", true};
    const ExactFields ex = exact_fields(kind);
    for (int l : levels) {
      const bool flat = kind == ProblemKind::Flat;
      auto space = make_space(flat ? build_disc_mesh(l) : build_octasphere(l), flat);
      const AssembledForms forms = assemble_forms(
          *space, flat ? flat_membrane_weights(1.0, 0.0) : sphere_membrane_weights(1.0, 1.0, 1.0));
      r.values.push_back(residual_probe(space, forms, ex, opt.quad_degree, opt.residual_radius).total);
    }
    for (std::size_t i = 1; i < r.values.size(); ++i) r.pass = r.pass && r.values[i] < r.values[i - 1];
    done(r);
  };
  residual_report("residual-flat", ProblemKind::Flat, {2, 3, 4});
  residual_report("residual-sphere", ProblemKind::Sphere, {3, 4, 5});
  return out;
}

inline void write_probe_report(std::ostream& os, const std::vector<ProbeReport>& reports) {
  for (const auto& r : reports) {
    os << (r.pass ? "PASS " : "FAIL ") << r.name << " levels=";
    for (std::size_t i = 0; i < r.levels.size(); ++i) os << (i ? "," : "") << r.levels[i];
    os << " values=";
    for (std::size_t i = 0; i < r.values.size(); ++i) os << (i ? "," : "") << format_sci(r.values[i]);
    os << " threshold=" << format_sci(r.threshold) << " | " << r.criterion << '\n';
  }
}

}  // namespace sosfem
