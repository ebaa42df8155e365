// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed
// here and must not be tuned to make a run pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "massopt/error.hpp"
#include "massopt/oracle.hpp"
#include "massopt/pipeline.hpp"
#include "massopt/recovery.hpp"
#include "massopt/scalar_search.hpp"

using namespace massopt;

namespace tol {
constexpr double u_linf = 0.01;            // 1: relative L-inf error of u
constexpr double a_l1 = 0.02;              // 1: relative L1 error of a
constexpr double seconds = 10.0;           // 1: per case
constexpr double dirac_a = 0.05;           // 2: pointwise relative error on [0.1, 0.9]
constexpr double conjugate = 1e-8;         // 3
constexpr double recession = 1e-6;         // 3: numeric recession slope
constexpr double fenchel_young = -1e-12;   // 4: smallest admissible c(t) + c*(s) - ts
constexpr double biconjugate = 1e-7;       // 4: relative to 1 + |c(t)|
constexpr double report_field = 1e-3;      // 5
constexpr double lipschitz = 1e-9;         // 6
constexpr double oracle = 1e-6;            // 7
constexpr double mk_a_l1 = 0.03;           // 8
constexpr double mk_gradient = 1e-3;       // 8
constexpr double mk_support = 0.05;        // 8: {a > 0.05}
constexpr double reciprocal_floor = 1e-6;  // 9
constexpr double gradient_check = 1e-5;    // 10
} // namespace tol

namespace {

int failures = 0;

void line(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("[%s] %2d %-40s %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Runs a criterion body, turning an unexpected exception into a FAIL line.
void criterion(int id, const std::string& what, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const auto [pass, detail] = body();
    line(id, pass, what, detail);
  } catch (const std::exception& e) {
    line(id, false, what, std::string("exception: ") + e.what());
  }
}

CostFunction builtin(const std::string& name, std::vector<std::pair<std::string, double>> params = {}) {
  return CostFunction(make_builtin_cost(name, params), default_growth(name, params));
}

double l1_between(const Grid& g, const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t q = 0; q < g.quadrature_count(); ++q) {
    num += g.quadrature_weight(q) * std::abs(a[q] - b[q]);
    den += g.quadrature_weight(q) * std::abs(b[q]);
  }
  return num / den;
}

// c**(t) = sup_s (t s - c*(s)) from the closed-form conjugate.
double biconjugate(const ScalarCost& c, double t) {
  auto f = [&](double s) {
    const ExtReal v = c.conjugate(s);
    return v.is_finite() ? t * s - v.value() : -kInf;
  };
  HalfLineSearch opts;
  opts.abs_tol = 1e-12;
  const ExtReal rec = c.recession();
  const double top = rec.is_finite() ? rec.value() : 0.0;
  double best = maximize_concave_left_half_line(f, top, opts).best.value;
  if (rec.is_infinite()) best = std::max(best, maximize_concave_half_line(f, 0.0, opts).best.value);
  return best;
}

} // namespace

int main() {
  std::printf("acceptance suite\n");

  criterion(1, "quadratic ball, uniform source", [] {
    bool ok = true;
    std::string detail;
    for (int n : {1, 2, 3}) {
      const auto cmp = compare_fixture(fixture("quadratic_ball_uniform(" + std::to_string(n) + ")"), 2048);
      ok = ok && cmp.solution.status == SolveStatus::converged && cmp.u_linf_error <= tol::u_linf &&
           cmp.a_l1_error <= tol::a_l1 && cmp.seconds <= tol::seconds;
      detail += fmt("n=%g: u %.1e, a %.1e", n, cmp.u_linf_error, cmp.a_l1_error) + fmt(", %.2fs; ", cmp.seconds);
    }
    return std::pair{ok, detail};
  });

  criterion(2, "quadratic ball, Dirac source", [] {
    bool ok = true;
    std::string detail;
    for (int n : {2, 3}) {
      const auto fx = fixture("quadratic_ball_dirac(" + std::to_string(n) + ")");
      const auto p = fx.problem(2048);
      const auto s = solve_auxiliary(p);
      const auto mu = recover_density_SL(s, p);
      double worst = 0.0;
      for (std::size_t q = 0; q < p.grid.quadrature_count(); ++q) {
        const double r = p.grid.quadrature_point(q)[0];
        if (r < 0.1 || r > 0.9) continue;
        worst = std::max(worst, std::abs(mu.density[q] / fx.a_exact(r) - 1.0));
      }
      ok = ok && s.status == SolveStatus::converged && worst <= tol::dirac_a;
      detail += fmt("n=%g: max rel err %.1e; ", n, worst);
    }
    return std::pair{ok, detail};
  });

  criterion(3, "conjugate and recession catalog", [] {
    const auto quad = make_quadratic_cost();
    const auto recip = make_reciprocal_cost();
    const auto lin = make_linear_cost(0.5);
    const std::function<double(double)> exact[] = {
        [](double s) { return s >= 0.0 ? 0.5 * s * s : 0.0; },
        [](double s) { return s <= 1.0 ? -2.0 * std::sqrt(1.0 - s) : kInf; },
        [](double s) { return s <= 0.5 ? 0.0 : kInf; },
    };
    const ScalarCost* costs[] = {quad.get(), recip.get(), lin.get()};
    double worst = 0.0;
    int mismatched = 0;
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 100; ++i) {
        const double s = -2.0 + 5.0 * i / 99.0;
        const ExtReal num = costs[k]->numeric_conjugate(s);
        const double ref = exact[k](s);
        if (std::isinf(ref) || num.is_infinite()) {
          mismatched += std::isinf(ref) != num.is_infinite();
          continue;
        }
        worst = std::max(worst, std::abs(num.value() - ref));
      }
    const bool classes = quad->recession().is_infinite() && recip->recession().value() == 1.0 &&
                         lin->recession().value() == 0.5 && quad->regime() == Regime::superlinear &&
                         recip->regime() == Regime::linear && lin->regime() == Regime::linear;
    const ExtReal nq = quad->numeric_recession(), nr = recip->numeric_recession(), nl = lin->numeric_recession();
    const bool numeric = nq.is_infinite() && std::abs(nr.value() - 1.0) <= tol::recession &&
                         std::abs(nl.value() - 0.5) <= tol::recession;
    const bool ok = worst <= tol::conjugate && mismatched == 0 && classes && numeric;
    std::string detail = fmt("max |c* err| %.1e, finiteness mismatches %g, numeric recession {", worst, mismatched);
    detail += std::string(nq.is_infinite() ? "inf" : "finite") + fmt(", %.9g, %.9g}", nr.value(), nl.value());
    return std::pair{ok, detail};
  });

  criterion(4, "Fenchel-Young and biconjugacy", [] {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> ut(0.0, 4.0), us(-4.0, 4.0);
    const std::vector<ScalarCostPtr> costs{make_quadratic_cost(), make_power_cost(3.0), make_linear_cost(0.5),
                                           make_reciprocal_cost(), make_affine_quadratic_cost(0.5, 0.01)};
    double min_gap = kInf, worst_bi = 0.0;
    for (const auto& c : costs) {
      for (int i = 0; i < 10000; ++i) {
        const double t = ut(rng), s = us(rng);
        const ExtReal ct = c->value(t), cs = c->conjugate(s);
        if (ct.is_infinite() || cs.is_infinite()) continue;
        min_gap = std::min(min_gap, ct.value() + cs.value() - t * s);
      }
      for (int i = 1; i <= 256; ++i) {
        const double t = 5.0 * i / 256.0;
        const double ct = c->value(t).value();
        worst_bi = std::max(worst_bi, std::abs(biconjugate(*c, t) - ct) / (1.0 + std::abs(ct)));
      }
    }
    const bool ok = min_gap >= tol::fenchel_young && worst_bi <= tol::biconjugate;
    return std::pair{ok, fmt("min c(t)+c*(s)-ts %.1e over 5x10^4 pairs, biconjugate err %.1e", min_gap, worst_bi)};
  });

  criterion(5, "optimality verification on fixtures", [] {
    bool ok = true;
    double worst = 0.0;
    std::string worst_name;
    for (const auto& name : fixture_catalog()) {
      const auto fx = fixture(name);
      const int n = fx.name.rfind("quadratic_ball", 0) == 0 ? 2048 : 1024;
      const auto cmp = compare_fixture(fx, n);
      const double w = cmp.report.worst();
      ok = ok && w <= tol::report_field;
      if (w >= worst) {
        worst = w;
        worst_name = name;
      }
    }
    return std::pair{ok, fmt("%g fixtures, largest report field %.1e", double(fixture_catalog().size()), worst) +
                             " (" + worst_name + ")"};
  });

  criterion(6, "regime-L Lipschitz bound", [] {
    struct Case {
      Grid grid;
      CostFunction cost;
      SourceTerm source;
    };
    std::vector<Case> cases;
    {
      const Grid g = Grid::interval(-1.0, 1.0, 1024);
      cases.push_back({g, builtin("linear"), SourceTerm::constant(g, 1.0)});
      cases.push_back({g, builtin("reciprocal"), SourceTerm::constant(g, 1.0)});
      cases.push_back({g, builtin("linear", {{"k", 2.0}}), SourceTerm::constant(g, 5.0)});
      SourceTerm f = SourceTerm::from_expression(g, Expression::parse("1 + x", {"x", "y"}));
      f.atoms.push_back({{0.3, 0.0}, 2.0});
      cases.push_back({g, builtin("linear"), f});
      cases.push_back({g, CostFunction(make_linear_cost(0.5), {}, WeightExpression{Expression::parse("1 + x*x", {"x", "y"})}),
                       SourceTerm::constant(g, 1.0)});
    }
    {
      const Grid g = Grid::radial(1.0, 1024, 2);
      cases.push_back({g, builtin("linear"), SourceTerm::constant(g, 1.0)});
    }
    {
      const Grid g = Grid::rectangle(-1.0, 1.0, -1.0, 1.0, 8, 8);
      cases.push_back({g, builtin("linear"), SourceTerm::constant(g, 1.0)});
    }
    double excess = -kInf;
    bool converged = true;
    for (const Case& c : cases) {
      const auto p = assemble_problem(c.grid, c.cost, c.source);
      const auto s = solve_auxiliary(p);
      converged = converged && s.status == SolveStatus::converged;
      for (std::size_t q = 0; q < p.grid.quadrature_count(); ++q)
        excess = std::max(excess, s.grad_u.norm_at(q) - p.lip_bound[q]);
    }
    const bool ok = converged && excess <= tol::lipschitz;
    return std::pair{ok, fmt("%g linear-regime solves, max(|grad u| - bound) = %.1e", double(cases.size()), excess)};
  });

  criterion(7, "oracle equivalence on small instances", [] {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double worst = 0.0;
    int sl = 0, l = 0;
    for (int trial = 0; trial < 20; ++trial) {
      const int cells = 3 + static_cast<int>(uni(rng) * 7.0);  // 2..8 interior nodes
      const double a = -1.0 - uni(rng), b = 0.5 + uni(rng);
      const Grid g = Grid::interval(a, b, cells);
      CostFunction cost;
      switch (trial % 5) {
        case 0: cost = builtin("quadratic", {{"k", 0.5 + uni(rng)}}); break;
        case 1: cost = builtin("power", {{"p", 1.5 + 2.0 * uni(rng)}}); break;
        case 2: cost = builtin("linear", {{"k", 0.25 + uni(rng)}}); break;
        case 3: cost = builtin("reciprocal"); break;
        default: cost = builtin("affine_quadratic", {{"k", 0.5}, {"eps", 0.05 + 0.2 * uni(rng)}}); break;
      }
      SourceTerm f = SourceTerm::constant(g, 0.0);
      for (double& v : f.density.values) v = 2.0 * uni(rng) - 0.5;
      (cost.regime() == Regime::superlinear ? sl : l)++;
      const auto p = assemble_problem(g, cost, f);
      const double solver = solve_auxiliary(p).objective;
      const double brute = brute_force_min(p).objective;
      worst = std::max(worst, std::abs(solver - brute));
    }
    return std::pair{worst <= tol::oracle, fmt("20 instances (%g SL, %g L), max |solver - brute| %.1e", sl, l, worst)};
  });

  criterion(8, "1D Monge-Kantorovich reduction", [] {
    const auto fx = fixture("mk_interval_uniform");
    const auto p = fx.problem(1024);
    const auto s = solve_auxiliary(p);
    const auto mu = recover_measure_L_1d(s, p);
    std::vector<double> exact;
    double grad_err = 0.0;
    for (std::size_t q = 0; q < p.grid.quadrature_count(); ++q) {
      exact.push_back(fx.a_exact(p.grid.quadrature_point(q)[0]));
      if (mu.density[q] > tol::mk_support) grad_err = std::max(grad_err, std::abs(s.grad_u.norm_at(q) - 1.0));
    }
    const double a_err = l1_between(p.grid, mu.density, exact);
    RegularizationOptions opt;
    opt.require_cauchy = false;
    const auto reg = recover_via_regularization(p, opt);
    const double reg_err = l1_between(p.grid, reg.measure.density, mu.density);
    const bool ok = mu.atoms.empty() && a_err <= tol::mk_a_l1 && grad_err <= tol::mk_gradient &&
                    reg.steps.back().epsilon == 1e-4 && reg_err <= tol::mk_a_l1;
    return std::pair{ok, fmt("a vs |x| %.1e, max ||u'|-1| %.1e, regularized vs 1D %.1e", a_err, grad_err, reg_err)};
  });

  criterion(9, "reciprocal cost lower bound a >= 1", [] {
    const Grid g = Grid::interval(-1.0, 1.0, 1024);
    const auto p = assemble_problem(g, builtin("reciprocal"), SourceTerm::constant(g, 1.0));
    const auto mu = recover_measure_L_1d(solve_auxiliary(p), p);
    const double floor = VerifyOptions{}.density_floor;
    double amin = kInf;
    for (double a : mu.density)
      if (a > floor) amin = std::min(amin, a);
    return std::pair{amin >= 1.0 - tol::reciprocal_floor, fmt("min a above the floor = %.12g", amin)};
  });

  criterion(10, "first variation vs central differences", [] {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const Grid rect = Grid::rectangle(-1.0, 1.0, -1.0, 1.0, 6, 6);
    const Grid line = Grid::interval(-1.0, 1.0, 24);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const Grid& g = k % 2 ? rect : line;
      const CostFunction cost = k % 3 == 0   ? builtin("quadratic")
                                : k % 3 == 1 ? builtin("power", {{"p", 3.0}})
                                             : builtin("affine_quadratic", {{"k", 0.5}, {"eps", 0.1}});
      const auto p = assemble_problem(g, cost, SourceTerm::constant(g, 1.0));
      // Smooth random point: a bump plus noise, and a random direction.
      ScalarField u = ScalarField::zeros(g), v = ScalarField::zeros(g);
      const double amp = 0.5 + 0.5 * uni(rng);
      for (std::size_t i = 0; i < g.node_count(); ++i) {
        if (g.on_boundary(i)) continue;
        const Point& x = g.node(i);
        u[i] = amp * (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]) + 0.05 * uni(rng);
        v[i] = uni(rng);
      }
      const auto grad = objective_gradient(p, u);
      double analytic = 0.0;
      for (std::size_t i = 0; i < g.node_count(); ++i) analytic += grad[i] * v[i];
      const double h = 1e-5;
      ScalarField up = u, dn = u;
      for (std::size_t i = 0; i < g.node_count(); ++i) {
        up[i] += h * v[i];
        dn[i] -= h * v[i];
      }
      const double fd = (objective_eval(p, up).value() - objective_eval(p, dn).value()) / (2.0 * h);
      worst = std::max(worst, std::abs(analytic - fd) / std::max(std::abs(fd), 1e-8));
    }
    return std::pair{worst <= tol::gradient_check, fmt("50 points, max relative error %.1e", worst)};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
