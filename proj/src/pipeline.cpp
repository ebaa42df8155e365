#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "massopt/error.hpp"
#include "massopt/field_io.hpp"
#include "massopt/pipeline.hpp"

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace massopt {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::config_error, key + ": " + what);
}

double to_double(const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    bad(key, "expected a number, got '" + text + "'");
  }
  while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  if (pos != text.size() || std::isnan(v)) bad(key, "expected a number, got '" + text + "'");
  return v;
}

int to_int(const std::string& key, const std::string& text) {
  const double v = to_double(key, text);
  if (v != std::floor(v) || std::abs(v) > 1e9) bad(key, "expected an integer, got '" + text + "'");
  return static_cast<int>(v);
}

std::vector<std::string> words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::vector<double> numbers(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& w : words(text)) out.push_back(to_double(key, w));
  return out;
}

double positive(const std::string& key, double v) {
  if (!(v > 0.0)) bad(key, "must be positive");
  return v;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"domain", {"kind", "bounds", "resolution", "dimension"}},
      {"cost",
       {"builtin", "params", "expression", "table", "weight_expression", "weight_table", "growth_alpha",
        "growth_beta", "growth_t0"}},
      {"source", {"density", "density_expression", "atoms"}},
      {"solver",
       {"method", "max_iterations", "gap_tolerance", "step_ratio", "power_iterations", "certificate_interval",
        "restart_interval"}},
      {"recovery", {"method", "max_density", "schedule", "cauchy_tolerance", "concentration_ratio"}},
      {"verify",
       {"pde_residual", "inclusion_violation", "singular_saturation_error", "boundary_mass",
        "duality_identity_error", "exclusion_radius", "density_floor"}},
      {"output", {"directory", "u_field", "measure_csv", "measure_json", "report", "log"}},
  };
  return s;
}

std::string resolve(const std::string& base, const std::string& path) {
  const fs::path p(path);
  return p.is_absolute() ? p.string() : (fs::path(base) / p).string();
}

std::vector<std::vector<double>> read_numeric_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path);
  std::vector<std::vector<double>> rows;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::vector<double> row;
    bool numeric = true;
    for (const auto& w : words(line)) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(w, &pos));
        if (pos != w.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (numeric && !row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

void apply_config(RunConfig& c, const std::string& section, const std::string& key, const std::string& value) {
  const std::string name = section + "." + key;
  if (section == "domain") {
    if (key == "kind") {
      if (value == "interval") c.domain.kind = GridKind::interval;
      else if (value == "rectangle") c.domain.kind = GridKind::rectangle;
      else if (value == "radial") c.domain.kind = GridKind::radial;
      else bad(name, "expected interval, rectangle or radial, got '" + value + "'");
    } else if (key == "bounds") {
      c.domain.bounds = numbers(name, value);
    } else if (key == "resolution") {
      c.domain.resolution.clear();
      for (const auto& w : words(value)) c.domain.resolution.push_back(to_int(name, w));
    } else if (key == "dimension") {
      c.domain.dimension = to_int(name, value);
    }
  } else if (section == "cost") {
    if (key == "builtin") c.cost.builtin = value;
    else if (key == "expression") c.cost.expression = value;
    else if (key == "table") c.cost.table_path = resolve(c.base_directory, value);
    else if (key == "weight_expression") c.cost.weight_expression = value;
    else if (key == "weight_table") c.cost.weight_table_path = resolve(c.base_directory, value);
    else if (key == "params") {
      for (const auto& w : words(value)) {
        const auto eq = w.find('=');
        if (eq == std::string::npos || eq == 0) bad(name, "expected name=value pairs, got '" + w + "'");
        c.cost.params.emplace_back(w.substr(0, eq), to_double(name, w.substr(eq + 1)));
      }
    } else {
      if (!c.cost.growth) c.cost.growth = GrowthConstants{};
      const double v = to_double(name, value);
      if (key == "growth_alpha") c.cost.growth->alpha = v;
      if (key == "growth_beta") c.cost.growth->beta = v;
      if (key == "growth_t0") c.cost.growth->t0 = v;
    }
  } else if (section == "source") {
    if (key == "density") c.source.density = to_double(name, value);
    else if (key == "density_expression") c.source.density_expression = value;
    else if (key == "atoms") {
      std::string item;
      std::istringstream in(value);
      while (std::getline(in, item, ';')) {
        const auto v = numbers(name, item);
        if (v.empty()) continue;
        if (v.size() == 2) c.source.atoms.push_back({{v[0], 0.0}, v[1]});
        else if (v.size() == 3) c.source.atoms.push_back({{v[0], v[1]}, v[2]});
        else bad(name, "each atom is 'x mass' or 'x y mass', separated by ';'");
      }
    }
  } else if (section == "solver") {
    SolverParams& s = c.solver;
    if (key == "method") {
      try {
        s.method = solver_method_from_string(value);
      } catch (const Error& e) {
        bad(name, e.what());
      }
    } else if (key == "max_iterations") {
      s.max_iterations = to_int(name, value);
      if (s.max_iterations < 1) bad(name, "must be at least 1");
    } else if (key == "gap_tolerance") {
      s.gap_tolerance = positive(name, to_double(name, value));
    } else if (key == "step_ratio") {
      s.step_ratio = positive(name, to_double(name, value));
    } else if (key == "power_iterations") {
      s.power_iterations = std::max(1, to_int(name, value));
    } else if (key == "certificate_interval") {
      s.certificate_interval = std::max(1, to_int(name, value));
    } else if (key == "restart_interval") {
      s.restart_interval = std::max(0, to_int(name, value));
    }
  } else if (section == "recovery") {
    RecoveryConfig& r = c.recovery;
    if (key == "method") {
      if (value == "auto") r.method = RecoveryMethod::automatic;
      else if (value == "superlinear") r.method = RecoveryMethod::superlinear;
      else if (value == "flux_inversion") r.method = RecoveryMethod::flux_inversion;
      else if (value == "regularization") r.method = RecoveryMethod::regularization;
      else bad(name, "expected auto, superlinear, flux_inversion or regularization");
    } else if (key == "max_density") {
      r.max_density = positive(name, to_double(name, value));
    } else if (key == "schedule") {
      r.regularization.schedule = numbers(name, value);
      for (double e : r.regularization.schedule) positive(name, e);
    } else if (key == "cauchy_tolerance") {
      r.regularization.cauchy_tolerance = positive(name, to_double(name, value));
    } else if (key == "concentration_ratio") {
      r.regularization.concentration_ratio = positive(name, to_double(name, value));
    }
  } else if (section == "verify") {
    const double v = to_double(name, value);
    if (key == "exclusion_radius") {
      if (v < 0.0) bad(name, "must be nonnegative");
      c.verify.exclusion_radius = v;
    } else if (key == "density_floor") {
      c.verify.density_floor = positive(name, v);
    } else {
      positive(name, v);
      if (key == "pde_residual") c.thresholds.pde_residual = v;
      if (key == "inclusion_violation") c.thresholds.inclusion_violation = v;
      if (key == "singular_saturation_error") c.thresholds.singular_saturation_error = v;
      if (key == "boundary_mass") c.thresholds.boundary_mass = v;
      if (key == "duality_identity_error") c.thresholds.duality_identity_error = v;
    }
  } else if (section == "output") {
    OutputConfig& o = c.output;
    if (key == "directory") o.directory = value;
    if (key == "u_field") o.u_field = value;
    if (key == "measure_csv") o.measure_csv = value;
    if (key == "measure_json") o.measure_json = value;
    if (key == "report") o.report = value;
    if (key == "log") o.log = value;
  }
}

void check_config(const RunConfig& c) {
  const DomainConfig& d = c.domain;
  const std::size_t nb = d.kind == GridKind::interval ? 2 : d.kind == GridKind::rectangle ? 4 : 1;
  const std::size_t nr = d.kind == GridKind::rectangle ? 2 : 1;
  if (d.bounds.size() != nb) bad("domain.bounds", "expected " + std::to_string(nb) + " numbers");
  if (d.resolution.size() != nr) bad("domain.resolution", "expected " + std::to_string(nr) + " integers");
  for (int r : d.resolution)
    if (r < 8) bad("domain.resolution", "must be at least 8, got " + std::to_string(r));
  if (d.kind == GridKind::radial) {
    if (d.dimension < 1) bad("domain.dimension", "must be at least 1");
    if (!(d.bounds[0] > 0.0)) bad("domain.bounds", "radius must be positive");
  } else {
    if (!(d.bounds[1] > d.bounds[0])) bad("domain.bounds", "upper bound must exceed lower bound");
    if (nb == 4 && !(d.bounds[3] > d.bounds[2])) bad("domain.bounds", "upper bound must exceed lower bound");
  }
  const int forms = !c.cost.builtin.empty() + !c.cost.expression.empty() + !c.cost.table_path.empty();
  if (forms != 1) bad("cost", "exactly one of builtin, expression, table is required");
  if (!c.cost.params.empty() && c.cost.builtin.empty()) bad("cost.params", "only builtin costs take params");
  if (!c.cost.weight_expression.empty() && !c.cost.weight_table_path.empty())
    bad("cost.weight_table", "give either weight_expression or weight_table");
}

} // namespace

RunConfig parse_config(const std::string& text, const std::string& base_directory) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::config_error, "line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig c;
  c.base_directory = base_directory;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) bad(section, "key outside any section");
    const auto it = schema().find(section);
    if (it == schema().end()) bad(section, "unknown section");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) bad(section + "." + key, "unknown key");
      apply_config(c, section, key, value.get_value<std::string>());
    }
  }
  if (tree.find("domain") == tree.not_found()) bad("domain", "section is required");
  if (tree.find("cost") == tree.not_found()) bad("cost", "section is required");
  check_config(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config_error, "cannot read config file " + path);
  std::stringstream text;
  text << in.rdbuf();
  const fs::path parent = fs::path(path).parent_path();
  return parse_config(text.str(), parent.empty() ? "." : parent.string());
}

Grid build_grid(const DomainConfig& d) {
  switch (d.kind) {
    case GridKind::interval: return Grid::interval(d.bounds[0], d.bounds[1], d.resolution[0]);
    case GridKind::rectangle:
      return Grid::rectangle(d.bounds[0], d.bounds[1], d.bounds[2], d.bounds[3], d.resolution[0], d.resolution[1]);
    case GridKind::radial: return Grid::radial(d.bounds[0], d.resolution[0], d.dimension);
  }
  return Grid::interval(0.0, 1.0, 8);
}

CostFunction build_cost(const RunConfig& config, const Grid& grid) {
  const CostConfig& cc = config.cost;
  ScalarCostPtr base;
  std::optional<GrowthConstants> growth = cc.growth;
  if (!cc.builtin.empty()) {
    base = make_builtin_cost(cc.builtin, cc.params);
    if (!growth) growth = default_growth(cc.builtin, cc.params);
  } else if (!cc.expression.empty()) {
    base = make_expression_cost(cc.expression);
  } else {
    std::vector<double> t, c;
    for (const auto& row : read_numeric_rows(cc.table_path)) {
      if (row.size() < 2) throw Error(ErrorCode::config_error, "cost.table: rows need t and c columns");
      t.push_back(row[0]);
      c.push_back(row[1]);
    }
    base = make_tabulated_cost(std::move(t), std::move(c));
  }
  if (!growth) {
    GrowthConstants g;
    try {
      const ExtReal rec = base->recession();
      g.alpha = rec.is_finite() ? std::min(1.0, 0.5 * rec.value()) : 1.0;
      const ExtReal cs = base->conjugate(g.alpha);
      g.beta = cs.is_finite() ? -cs.value() : 0.0;
    } catch (const Error&) {
      // Malformed costs keep the defaults; validation reports the failure.
    }
    growth = g;
  }

  SpatialWeight weight;
  if (!cc.weight_expression.empty()) {
    weight = WeightExpression{Expression::parse(cc.weight_expression, {"x", "y"})};
  } else if (!cc.weight_table_path.empty()) {
    WeightTable table;
    for (const auto& row : read_numeric_rows(cc.weight_table_path)) table.values.push_back(row.back());
    if (table.values.size() != grid.quadrature_count())
      throw Error(ErrorCode::config_error, "cost.weight_table: " + std::to_string(table.values.size()) +
                                               " values for " + std::to_string(grid.quadrature_count()) +
                                               " quadrature points");
    weight = std::move(table);
  }
  return CostFunction(std::move(base), *growth, std::move(weight));
}

SourceTerm build_source(const SourceConfig& s, const Grid& grid) {
  SourceTerm f = s.density_expression.empty()
                     ? SourceTerm::constant(grid, s.density)
                     : SourceTerm::from_expression(grid, Expression::parse(s.density_expression, {"x", "y"}));
  f.atoms = s.atoms;
  return f;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_converged:
    case ErrorCode::schedule_too_short: return exit_not_converged;
    case ErrorCode::unbounded:
    case ErrorCode::numeric_overflow: return exit_thresholds;
    default: return exit_config;
  }
}

bool thresholds_met(const OptimalityReport& r, const Thresholds& t, std::vector<std::string>* failed) {
  const std::pair<const char*, std::pair<double, double>> checks[] = {
      {"pde_residual", {r.pde_residual, t.pde_residual}},
      {"inclusion_violation", {r.inclusion_violation, t.inclusion_violation}},
      {"singular_saturation_error", {r.singular_saturation_error, t.singular_saturation_error}},
      {"boundary_mass", {r.boundary_mass, t.boundary_mass}},
      {"duality_identity_error", {r.duality_identity_error, t.duality_identity_error}},
  };
  bool ok = true;
  for (const auto& [name, vt] : checks) {
    if (vt.first <= vt.second) continue;
    ok = false;
    if (failed) failed->push_back(name);
  }
  return ok;
}

RunResult run_pipeline(const RunConfig& config, const RunOverrides& overrides) {
  RunResult res;
  Grid grid = build_grid(config.domain);
  CostFunction cost = build_cost(config, grid);

  std::vector<Point> sample;
  const std::size_t stride = std::max<std::size_t>(1, grid.quadrature_count() / 64);
  for (std::size_t q = 0; q < grid.quadrature_count(); q += stride) sample.push_back(grid.quadrature_point(q));
  res.validation = validate_cost(cost, sample);
  if (!res.validation.passed) {
    const ValidationFailure& f = res.validation.failures.front();
    throw Error(ErrorCode::invalid_cost, "cost validation failed (" + std::to_string(res.validation.failures.size()) +
                                             " failures), first: " + f.check + " at t = " + format_double(f.t) +
                                             ": " + f.detail);
  }

  SourceTerm source = build_source(config.source, grid);
  const AuxiliaryProblem problem = assemble_problem(std::move(grid), std::move(cost), std::move(source));
  res.solution = solve_auxiliary(problem, config.solver);

  RecoveryMethod method = config.recovery.method;
  if (method == RecoveryMethod::automatic) {
    if (problem.regime == Regime::superlinear) method = RecoveryMethod::superlinear;
    else method = problem.grid.kind() == GridKind::rectangle ? RecoveryMethod::regularization
                                                              : RecoveryMethod::flux_inversion;
  }
  switch (method) {
    case RecoveryMethod::superlinear: res.measure = recover_density_SL(res.solution, problem); break;
    case RecoveryMethod::flux_inversion:
      res.measure = recover_measure_L_1d(res.solution, problem, config.recovery.max_density);
      break;
    default: {
      RegularizationOptions opt = config.recovery.regularization;
      opt.solver = config.solver;
      res.measure = recover_via_regularization(problem, opt).measure;
    }
  }

  res.report = verify_conditions(res.measure, res.solution, problem, config.verify);
  const bool pass = thresholds_met(res.report, config.thresholds, &res.failed_thresholds);

  const fs::path dir = overrides.output_directory ? fs::path(*overrides.output_directory)
                                                  : fs::path(resolve(config.base_directory, config.output.directory));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + dir.string() + ": " + ec.message());
  auto out = [&](const std::string& name) {
    res.written.push_back((dir / name).string());
    return res.written.back();
  };
  write_field_csv(out(config.output.u_field), problem.grid, res.solution.u_bar);
  const std::string mcsv = out(config.output.measure_csv);
  write_measure(mcsv, out(config.output.measure_json), problem.grid, res.measure);

  const std::string report_path = overrides.report_path ? *overrides.report_path : out(config.output.report);
  if (overrides.report_path) res.written.push_back(report_path);
  auto j = nlohmann::ordered_json::parse(report_to_json(res.report));
  j["solver"] = {{"method", std::string(to_string(res.solution.method))},
                 {"iterations", res.solution.iterations},
                 {"relative_gap", res.solution.relative_gap},
                 {"dual_residual", res.solution.dual_residual},
                 {"converged", res.solution.status == SolveStatus::converged}};
  j["thresholds_met"] = pass;
  j["failed"] = res.failed_thresholds;
  std::ofstream rep(report_path);
  if (!rep) throw Error(ErrorCode::io_error, "cannot write " + report_path);
  rep << j.dump(2) << '\n';

  const std::string log_path = overrides.log_path ? *overrides.log_path : out(config.output.log);
  if (overrides.log_path) res.written.push_back(log_path);
  write_iteration_log(log_path, res.solution);

  if (res.solution.status != SolveStatus::converged) res.exit_code = exit_not_converged;
  else res.exit_code = pass ? exit_pass : exit_thresholds;
  return res;
}

std::string conjugate_table(const CostFunction& cost, const Point& x, double lo, double hi, int count) {
  if (count < 1) throw Error(ErrorCode::config_error, "count must be at least 1");
  if (!(hi >= lo)) throw Error(ErrorCode::config_error, "range must satisfy a <= b");
  const LocalCost c = cost.at(x);
  std::ostringstream out;
  out << "s,conjugate,subdiff_lo,subdiff_hi\n";
  for (int i = 0; i < count; ++i) {
    const double s = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
    const ExtReal v = c.conjugate(s);
    out << format_double(s) << ',' << format_double(v.value()) << ',';
    if (v.is_finite()) {
      const Interval d = c.subdifferential(s);
      out << format_double(d.lo) << ',' << format_double(d.hi) << '\n';
    } else {
      out << "nan,nan\n";
    }
  }
  return out.str();
}

FixtureComparison compare_fixture(const ClosedFormFixture& fx, int resolution, const SolverParams& params) {
  FixtureComparison cmp;
  cmp.name = fx.name;
  cmp.resolution = resolution;
  const auto start = std::chrono::steady_clock::now();
  const AuxiliaryProblem p = fx.problem(resolution);
  cmp.solution = solve_auxiliary(p, params);
  cmp.measure = p.regime == Regime::superlinear ? recover_density_SL(cmp.solution, p)
                                                 : recover_measure_L_1d(cmp.solution, p);
  VerifyOptions vo;
  vo.exclusion_radius = fx.exclusion_radius;
  cmp.report = verify_conditions(cmp.measure, cmp.solution, p, vo);
  cmp.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  auto in_region = [&](double r) { return r >= fx.valid_min - 1e-12 && r <= fx.valid_max + 1e-12; };
  double umax = 0.0, uerr = 0.0;
  for (std::size_t i = 0; i < p.grid.node_count(); ++i) {
    const double r = std::abs(p.grid.node(i)[0]);
    if (!in_region(r)) continue;
    const double exact = fx.u_exact(p.grid.node(i)[0]);
    umax = std::max(umax, std::abs(exact));
    uerr = std::max(uerr, std::abs(cmp.solution.u_bar[i] - exact));
  }
  cmp.u_linf_error = umax > 0.0 ? uerr / umax : uerr;

  double num = 0.0, den = 0.0, amax = 0.0;
  for (std::size_t q = 0; q < p.grid.quadrature_count(); ++q)
    if (in_region(std::abs(p.grid.quadrature_point(q)[0])))
      amax = std::max(amax, fx.a_exact(p.grid.quadrature_point(q)[0]));
  for (std::size_t q = 0; q < p.grid.quadrature_count(); ++q) {
    const double x = p.grid.quadrature_point(q)[0];
    cmp.max_gradient = std::max(cmp.max_gradient, cmp.solution.grad_u.norm_at(q));
    if (!in_region(std::abs(x))) continue;
    const double exact = fx.a_exact(x), w = p.grid.quadrature_weight(q);
    num += w * std::abs(cmp.measure.density[q] - exact);
    den += w * std::abs(exact);
    // Pointwise errors only where the exact density is not near zero.
    if (exact >= 1e-2 * amax) cmp.a_max_error = std::max(cmp.a_max_error, std::abs(cmp.measure.density[q] / exact - 1.0));
  }
  cmp.a_l1_error = den > 0.0 ? num / den : num;
  return cmp;
}

} // namespace massopt
