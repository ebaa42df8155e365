#include <algorithm>
#include <cmath>
#include <fstream>

#include "massopt/auxiliary_solver.hpp"
#include "massopt/error.hpp"
#include "massopt/field_io.hpp"
#include "solver_internal.hpp"

namespace massopt {

double AuxiliaryProblem::max_lip_bound() const {
  double m = 0.0;
  for (double c : lip_bound) m = std::max(m, c);
  return m;
}

AuxiliaryProblem assemble_problem(Grid grid, CostFunction cost, SourceTerm source, bool check_dirac_admissibility) {
  check_source(grid, source);
  AuxiliaryProblem p;
  p.regime = cost.regime();
  if (check_dirac_admissibility && p.regime == Regime::superlinear && !source.atoms.empty()) {
    const bool quadratic = cost.base().family() == "quadratic";
    if (!quadratic || grid.dimension() > 3)
      throw Error(ErrorCode::inadmissible_source,
                  "Dirac sources in the superlinear regime are admitted only for the quadratic cost in dimension "
                  "n <= 3 (got " + cost.base().name() + ", n = " + std::to_string(grid.dimension()) + ")");
  }
  if (const auto* table = std::get_if<WeightTable>(&cost.spatial_weight()))
    if (table->values.size() != grid.quadrature_count())
      throw Error(ErrorCode::invalid_cost, "tabulated weight has " + std::to_string(table->values.size()) +
                                               " entries, the grid has " +
                                               std::to_string(grid.quadrature_count()) + " quadrature points");
  p.local.reserve(grid.quadrature_count());
  for (std::size_t q = 0; q < grid.quadrature_count(); ++q) {
    p.local.push_back(cost.at(grid.quadrature_point(q), q));
    p.lip_bound.push_back(p.local.back().lipschitz_bound());
  }
  p.load = load_vector(grid, source);
  p.grid = std::move(grid);
  p.cost = std::move(cost);
  p.source = std::move(source);
  return p;
}

std::string_view to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::automatic: return "auto";
    case SolverMethod::flux_line: return "flux_line";
    case SolverMethod::primal_dual: return "primal_dual";
  }
  return "auto";
}

SolverMethod solver_method_from_string(const std::string& s) {
  if (s == "auto") return SolverMethod::automatic;
  if (s == "flux_line") return SolverMethod::flux_line;
  if (s == "primal_dual") return SolverMethod::primal_dual;
  throw Error(ErrorCode::config_error, "unknown solver method '" + s + "' (auto, flux_line, primal_dual)");
}

ExtReal objective_eval(const AuxiliaryProblem& p, const ScalarField& u) {
  const VectorField du = gradient(p.grid, u);
  double total = 0.0;
  for (std::size_t q = 0; q < p.grid.quadrature_count(); ++q) {
    const ExtReal v = p.local[q].phi(du.norm_at(q));
    if (v.is_infinite()) return ExtReal::infinity();
    total += p.grid.quadrature_weight(q) * v.value();
  }
  for (std::size_t i = 0; i < u.size(); ++i) total -= p.load[i] * u[i];
  return ExtReal(total);
}

std::vector<double> objective_gradient(const AuxiliaryProblem& p, const ScalarField& u) {
  const VectorField du = gradient(p.grid, u);
  std::vector<double> out(p.grid.node_count(), 0.0);
  for (std::size_t q = 0; q < p.grid.quadrature_count(); ++q) {
    const double g = du.norm_at(q);
    if (g == 0.0) continue;
    // d/du of phi(|grad u|) is m(|grad u|) grad u / |grad u|.
    const double scale = p.grid.quadrature_weight(q) * p.local[q].flux_of_gradient(g).lo / g;
    const auto v = du.at(q);
    for (const StencilTerm& t : p.grid.quadrature_stencil(q)) {
      double dot = 0.0;
      for (int k = 0; k < du.components; ++k) dot += v[k] * t.grad[k];
      out[t.node] += scale * dot;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = p.grid.on_boundary(i) ? 0.0 : out[i] - p.load[i];
  return out;
}

double dual_eval(const AuxiliaryProblem& p, const VectorField& flux) {
  double total = 0.0;
  for (std::size_t q = 0; q < p.grid.quadrature_count(); ++q)
    total += p.grid.quadrature_weight(q) * p.local[q].flux_energy(flux.norm_at(q));
  return -total;
}

double flux_residual(const AuxiliaryProblem& p, const VectorField& flux) {
  const auto div = divergence_weighted(p.grid, DiscreteMeasure::lebesgue(p.grid), flux);
  double r2 = 0.0, b2 = 0.0;
  for (std::size_t i = 0; i < div.size(); ++i) {
    if (p.grid.on_boundary(i)) continue;
    const double r = -div[i] - p.load[i];
    r2 += r * r;
    b2 += p.load[i] * p.load[i];
  }
  return b2 > 0.0 ? std::sqrt(r2 / b2) : std::sqrt(r2);
}

namespace detail {

double relative_gap(double primal, double dual) {
  const double scale = std::max({std::abs(primal), std::abs(dual), 1e-14});
  return (primal - dual) / scale;
}

void certify(const AuxiliaryProblem& p, const SolverParams& params, AuxiliarySolution& sol) {
  sol.grad_u = gradient(p.grid, sol.u_bar);
  const ExtReal primal = objective_eval(p, sol.u_bar);
  sol.objective = primal.value();
  sol.dual_objective = dual_eval(p, sol.flux);
  sol.gap = sol.objective - sol.dual_objective;
  sol.relative_gap = relative_gap(sol.objective, sol.dual_objective);
  sol.dual_residual = flux_residual(p, sol.flux);
  sol.status = primal.is_finite() && sol.relative_gap <= params.gap_tolerance ? SolveStatus::converged
                                                                                : SolveStatus::not_converged;
}

} // namespace detail

AuxiliarySolution solve_auxiliary(const AuxiliaryProblem& p, const SolverParams& params) {
  if (!(params.gap_tolerance > 0.0)) throw Error(ErrorCode::config_error, "gap_tolerance must be positive");
  SolverMethod method = params.method;
  const bool one_dimensional = p.grid.kind() != GridKind::rectangle;
  if (method == SolverMethod::automatic) method = one_dimensional ? SolverMethod::flux_line : SolverMethod::primal_dual;
  if (method == SolverMethod::flux_line && !one_dimensional)
    throw Error(ErrorCode::unsupported_grid, "the flux-line solver needs an interval or radial grid");
  return method == SolverMethod::flux_line ? detail::solve_flux_line(p, params) : detail::solve_primal_dual(p, params);
}

void write_iteration_log(const std::string& path, const AuxiliarySolution& sol) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path);
  out << "iteration,primal,dual,gap\n";
  for (const IterationRecord& r : sol.history)
    out << r.iteration << ',' << format_double(r.primal) << ',' << format_double(r.dual) << ','
        << format_double(r.gap) << '\n';
}

} // namespace massopt
