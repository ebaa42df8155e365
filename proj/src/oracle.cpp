#include <cmath>
#include <fstream>
#include <regex>

#include "massopt/error.hpp"
#include "massopt/field_io.hpp"
#include "massopt/oracle.hpp"
#include "massopt/scalar_search.hpp"

namespace massopt {

namespace {

ClosedFormFixture ball_uniform(int n) {
  ClosedFormFixture fx;
  fx.name = "quadratic_ball_uniform(" + std::to_string(n) + ")";
  fx.dimension = n;
  fx.source = "uniform 1";
  fx.cost = "quadratic";
  const double k = std::cbrt(2.0 / n);
  fx.u_exact = [k](double r) { return 0.75 * k * (1.0 - std::pow(std::abs(r), 4.0 / 3.0)); };
  fx.a_exact = [k](double r) { return 0.5 * k * k * std::pow(std::abs(r), 2.0 / 3.0); };
  return fx;
}

ClosedFormFixture ball_dirac(int n) {
  ClosedFormFixture fx;
  fx.name = "quadratic_ball_dirac(" + std::to_string(n) + ")";
  fx.dimension = n;
  // Unit flux density through every sphere: the atom carries |S^{n-1}|.
  fx.source = "dirac " + format_double(unit_sphere_area(n));
  fx.cost = "quadratic";
  const double e = (4.0 - n) / 3.0;
  fx.u_exact = [n, e](double r) { return 3.0 * std::cbrt(2.0) / (4.0 - n) * (1.0 - std::pow(std::abs(r), e)); };
  fx.a_exact = [n](double r) { return std::pow(std::abs(r), 2.0 * (1.0 - n) / 3.0) / std::cbrt(2.0); };
  fx.valid_min = 0.1;
  fx.valid_max = 0.9;
  fx.exclusion_radius = 0.1;
  return fx;
}

ClosedFormFixture mk_interval() {
  ClosedFormFixture fx;
  fx.name = "mk_interval_uniform";
  fx.source = "uniform 1";
  fx.cost = "linear";
  // Flux v = -x, |u'| = 1 wherever the density is positive.
  fx.u_exact = [](double x) { return 1.0 - std::abs(x); };
  fx.a_exact = [](double x) { return std::abs(x); };
  return fx;
}

ClosedFormFixture reciprocal_interval() {
  ClosedFormFixture fx;
  fx.name = "reciprocal_interval";
  fx.source = "uniform 1";
  fx.cost = "reciprocal";
  // a u' = -x with a = (1 - u'^2/2)^{-1/2}.
  fx.u_exact = [](double x) { return 2.0 * (std::sqrt(1.5) - std::sqrt(1.0 + 0.5 * x * x)); };
  fx.a_exact = [](double x) { return std::sqrt(1.0 + 0.5 * x * x); };
  return fx;
}

bool is_ball(const ClosedFormFixture& fx) { return fx.name.rfind("quadratic_ball", 0) == 0; }

} // namespace

ClosedFormFixture fixture(const std::string& name) {
  static const std::regex ball(R"(quadratic_ball_(uniform|dirac)\((\d+)\))");
  std::smatch m;
  if (std::regex_match(name, m, ball)) {
    const int n = std::stoi(m[2]);
    if (m[1] == "uniform" && n >= 1) return ball_uniform(n);
    if (m[1] == "dirac" && n >= 1 && n <= 3) return ball_dirac(n);
  }
  if (name == "mk_interval_uniform") return mk_interval();
  if (name == "reciprocal_interval") return reciprocal_interval();
  throw Error(ErrorCode::unknown_fixture, "no fixture named '" + name + "'");
}

std::vector<std::string> fixture_catalog() {
  return {"quadratic_ball_uniform(1)", "quadratic_ball_uniform(2)", "quadratic_ball_uniform(3)",
          "quadratic_ball_dirac(2)",   "quadratic_ball_dirac(3)",   "mk_interval_uniform",
          "reciprocal_interval"};
}

Grid ClosedFormFixture::grid(int resolution) const {
  return is_ball(*this) ? Grid::radial(1.0, resolution, dimension) : Grid::interval(-1.0, 1.0, resolution);
}

CostFunction ClosedFormFixture::cost_function() const {
  return CostFunction(make_builtin_cost(cost, {}), default_growth(cost, {}));
}

SourceTerm ClosedFormFixture::source_term(const Grid& g) const {
  if (source.rfind("dirac ", 0) == 0) {
    SourceTerm f = SourceTerm::constant(g, 0.0);
    f.atoms.push_back({{0.0, 0.0}, std::stod(source.substr(6))});
    return f;
  }
  return SourceTerm::constant(g, 1.0);
}

AuxiliaryProblem ClosedFormFixture::problem(int resolution) const {
  Grid g = grid(resolution);
  SourceTerm f = source_term(g);
  return assemble_problem(std::move(g), cost_function(), std::move(f));
}

void write_fixture_fields(const ClosedFormFixture& fx, const Grid& grid, const std::string& u_path,
                          const std::string& a_path) {
  ScalarField u = ScalarField::zeros(grid);
  for (std::size_t i = 0; i < grid.node_count(); ++i) u[i] = fx.u_exact(grid.node(i)[0]);
  write_field_csv(u_path, grid, u);

  DiscreteMeasure mu;
  for (std::size_t q = 0; q < grid.quadrature_count(); ++q) mu.density.push_back(fx.a_exact(grid.quadrature_point(q)[0]));
  std::ofstream out(a_path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + a_path);
  out << "# grid: " << grid.describe() << "\n" << (grid.components() == 2 ? "x,y" : "x") << ",weight,a_exact\n";
  for (std::size_t q = 0; q < grid.quadrature_count(); ++q) {
    const Point& x = grid.quadrature_point(q);
    out << format_double(x[0]) << ',';
    if (grid.components() == 2) out << format_double(x[1]) << ',';
    out << format_double(grid.quadrature_weight(q)) << ',' << format_double(mu.density[q]) << '\n';
  }
}

BruteForceResult brute_force_min(const AuxiliaryProblem& p) {
  if (p.grid.kind() != GridKind::interval)
    throw Error(ErrorCode::too_large, "brute_force_min handles interval grids only");
  const std::size_t n = p.grid.node_count();
  if (n < 2 || n - 2 > 8)
    throw Error(ErrorCode::too_large, "brute_force_min handles at most 8 interior nodes, got " +
                                          std::to_string(n >= 2 ? n - 2 : 0));

  BruteForceResult res;
  res.minimizer = ScalarField::zeros(p.grid);
  ScalarField& u = res.minimizer;
  std::vector<double> h(n - 1), bound(n - 1);
  for (std::size_t c = 0; c + 1 < n; ++c) {
    h[c] = p.grid.node(c + 1)[0] - p.grid.node(c)[0];
    bound[c] = p.lip_bound[c];
  }

  auto value = [&](const ScalarField& v) {
    const ExtReal e = objective_eval(p, v);
    return e.is_finite() ? e.value() : kInf;
  };

  // Shift of the interior block [i, j] by t: only cells i-1 and j change slope.
  auto shift_range = [&](std::size_t i, std::size_t j) {
    Interval box{-kInf, kInf};
    if (p.regime == Regime::linear) {
      const double dl = u[i] - u[i - 1], dr = u[j + 1] - u[j];
      box.lo = std::max(-h[i - 1] * bound[i - 1] - dl, dr - h[j] * bound[j]);
      box.hi = std::min(h[i - 1] * bound[i - 1] - dl, dr + h[j] * bound[j]);
      if (box.lo > 0.0) box.lo = 0.0;
      if (box.hi < 0.0) box.hi = 0.0;
    }
    return box;
  };

  double current = value(u);
  auto line_search = [&](std::size_t i, std::size_t j) {
    ScalarField trial = u;
    auto at = [&](double t) {
      for (std::size_t k = i; k <= j; ++k) trial[k] = u[k] + t;
      return value(trial);
    };
    Interval box = shift_range(i, j);
    // Convex in t: widen an unbounded side until it stops decreasing.
    for (double* side : {&box.lo, &box.hi}) {
      if (std::isfinite(*side)) continue;
      const double sign = side == &box.lo ? -1.0 : 1.0;
      double r = 1.0;
      while (r < 1e8 && at(sign * r) < current) r *= 2.0;
      *side = sign * r;
    }
    const ScalarMax best = golden_section_max([&](double t) { return -at(t); }, box.lo, box.hi, 1e-12, 0.0);
    if (-best.value < current) {
      for (std::size_t k = i; k <= j; ++k) u[k] += best.argmax;
      current = -best.value;
      return std::abs(best.argmax);
    }
    return 0.0;
  };

  const std::size_t last = n - 2;
  for (res.sweeps = 1; res.sweeps <= 20000; ++res.sweeps) {
    const double before = current;
    double moved = 0.0;
    for (std::size_t i = 1; i <= last; ++i) moved = std::max(moved, line_search(i, i));
    for (std::size_t i = 1; i <= last; ++i)
      for (std::size_t j = i + 1; j <= last; ++j) moved = std::max(moved, line_search(i, j));
    if (moved < 1e-11 && before - current <= 1e-15 * std::max(1.0, std::abs(current))) break;
  }
  res.objective = current;
  return res;
}

} // namespace massopt
