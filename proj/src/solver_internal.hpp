#pragma once

#include "massopt/auxiliary_solver.hpp"

namespace massopt::detail {

AuxiliarySolution solve_flux_line(const AuxiliaryProblem& problem, const SolverParams& params);
AuxiliarySolution solve_primal_dual(const AuxiliaryProblem& problem, const SolverParams& params);

/// Fills grad_u, objective, dual objective, gap, residual and status from
/// u_bar and flux.
void certify(const AuxiliaryProblem& problem, const SolverParams& params, AuxiliarySolution& sol);

double relative_gap(double primal, double dual);

} // namespace massopt::detail
