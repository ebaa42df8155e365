#pragma once

#include <string>
#include <vector>

#include "massopt/convex_cost.hpp"
#include "massopt/grid.hpp"

namespace massopt {

/// Discrete auxiliary problem
///
///     minimize  sum_q w_q phi_q(|grad u(x_q)|) - <f, u>   over zero-boundary u,
///
/// with phi_q(g) = c*(x_q, g^2/2). Its dual maximizes -sum_q w_q phi_q*(|s_q|)
/// over quadrature fluxes s whose weak divergence reproduces f.
struct AuxiliaryProblem {
  Grid grid;
  CostFunction cost;
  SourceTerm source;
  Regime regime = Regime::superlinear;
  /// Lipschitz bound sqrt(2 c_inf(x,1)) at each quadrature point; +inf in SL.
  std::vector<double> lip_bound;
  std::vector<LocalCost> local;  // cost frozen at each quadrature point
  std::vector<double> load;      // b_j = <f, phi_j>

  double max_lip_bound() const;
};

/// Builds the problem after checking admissibility: atoms strictly inside,
/// and Dirac sources in the superlinear regime only for the quadratic catalog
/// cost with n <= 3 (Error(inadmissible_source) otherwise). The regularization
/// path lifts the Dirac rule through `check_dirac_admissibility`.
AuxiliaryProblem assemble_problem(Grid grid, CostFunction cost, SourceTerm source,
                                  bool check_dirac_admissibility = true);

enum class SolverMethod { automatic, flux_line, primal_dual };
std::string_view to_string(SolverMethod m);
SolverMethod solver_method_from_string(const std::string& s);

struct SolverParams {
  int max_iterations = 20000;
  double gap_tolerance = 1e-8;  // relative to max(|primal|, |dual|)
  SolverMethod method = SolverMethod::automatic;
  /// Primal-dual only: sigma / tau balance, power-iteration steps, how often
  /// (in iterations) the certificate is computed, and how often the iterates
  /// restart from the best certified pair (0 disables restarts).
  double step_ratio = 1.0;
  int power_iterations = 50;
  int certificate_interval = 10;
  int restart_interval = 0;
};

enum class SolveStatus { converged, not_converged };

struct IterationRecord {
  int iteration;
  double primal;
  double dual;
  double gap;
};

struct AuxiliarySolution {
  ScalarField u_bar;
  VectorField grad_u;
  /// Divergence-feasible dual flux at quadrature points.
  VectorField flux;
  double objective = 0.0;       // primal value I_{f,c}
  double dual_objective = 0.0;  // certified lower bound
  double gap = 0.0;
  double relative_gap = 0.0;
  /// ||D^T W flux - b|| / ||b|| over interior nodes.
  double dual_residual = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::converged;
  SolverMethod method = SolverMethod::flux_line;
  std::vector<IterationRecord> history;
};

/// Never throws on non-convergence: returns the best certified iterate with
/// status not_converged.
AuxiliarySolution solve_auxiliary(const AuxiliaryProblem& problem, const SolverParams& params = {});

/// sum_q w_q c*(x_q, |grad u|^2/2) - <f,u>; +inf when a gradient exceeds the
/// regime-L bound by more than kLipschitzSlack.
ExtReal objective_eval(const AuxiliaryProblem& problem, const ScalarField& u);
/// Derivative of objective_eval with respect to every interior nodal value
/// (boundary entries are zero). Requires c* differentiable at the gradients.
std::vector<double> objective_gradient(const AuxiliaryProblem& problem, const ScalarField& u);
/// -sum_q w_q phi_q*(|s_q|); a lower bound on the primal value when s is
/// divergence-feasible.
double dual_eval(const AuxiliaryProblem& problem, const VectorField& flux);
/// ||D^T W s - b|| / ||b|| over interior nodes (absolute when b = 0).
double flux_residual(const AuxiliaryProblem& problem, const VectorField& flux);

void write_iteration_log(const std::string& path, const AuxiliarySolution& solution);

} // namespace massopt
