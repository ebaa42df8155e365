#pragma once

#include <string>
#include <vector>

#include "massopt/auxiliary_solver.hpp"

namespace massopt {

/// Superlinear regime: a(x_q) in dc*(x_q, |grad u|^2/2). A nondegenerate
/// interval is resolved by matching the dual flux (a grad u ~ flux, projected
/// onto the interval), with the midpoint as fallback.
DiscreteMeasure recover_density_SL(const AuxiliarySolution& solution, const AuxiliaryProblem& problem);

/// Linear regime on interval and radial grids: a = v / g from the dual flux v
/// and the gradient g; a = min dc*(0) where the flux vanishes. Densities above
/// `max_density` are clipped and the excess mass becomes an atom at the
/// quadrature point.
DiscreteMeasure recover_measure_L_1d(const AuxiliarySolution& solution, const AuxiliaryProblem& problem,
                                     double max_density = kInf);

struct RegularizationOptions {
  std::vector<double> schedule{1e-2, 1e-3, 1e-4};
  /// Relative L1 distance between the last two densities that counts as Cauchy.
  double cauchy_tolerance = 0.05;
  /// Quadrature points with density >= ratio * mean density are flagged.
  double concentration_ratio = 20.0;
  /// Throw Error(schedule_too_short) when the path is not Cauchy.
  bool require_cauchy = true;
  SolverParams solver;
};

struct RegularizationStep {
  double epsilon;
  double objective;
  double relative_gap;
  double l1_change;  // relative L1 distance to the previous density; 0 for the first step
};

struct RegularizationResult {
  DiscreteMeasure measure;
  AuxiliarySolution solution;  // of the last regularized problem
  std::vector<RegularizationStep> steps;
  std::vector<std::size_t> concentration;  // flagged quadrature points
  bool cauchy = false;
};

/// Solves the superlinear problems with c(t) + eps t^2 along the schedule and
/// returns the last recovered density. Throws Error(regime_mismatch) for SL
/// input.
RegularizationResult recover_via_regularization(const AuxiliaryProblem& problem,
                                                const RegularizationOptions& options = {});

struct EnergyResult {
  double energy = 0.0;      // E_f(mu) = inf_u int |grad u|^2/2 dmu - <f,u>
  double compliance = 0.0;  // -E_f(mu)
  ScalarField state;        // the minimizing u
  int iterations = 0;
};

/// Solves the weighted problem -div(mu grad u) = f with conjugate gradients.
/// Atoms of mu add point stiffness. Throws Error(unbounded) when the source
/// charges a part of the grid that mu does not reach.
EnergyResult energy_eval(const Grid& grid, const DiscreteMeasure& mu, const SourceTerm& f);

/// C(mu) = sum_q w_q c(x_q, a_q) + sum_atoms c_inf(x, 1) mass. The boundary
/// mass is priced with the unweighted recession slope.
ExtReal cost_eval(const Grid& grid, const DiscreteMeasure& mu, const CostFunction& cost);

struct VerifyOptions {
  /// Points closer than this to a source atom are left out of the pointwise
  /// checks (the exact density is unbounded there).
  double exclusion_radius = 0.0;
  /// Inclusion is checked only where a > density_floor * max a.
  double density_floor = 1e-12;
};

struct OptimalityReport {
  double pde_residual = 0.0;
  double inclusion_violation = 0.0;  // normalized Fenchel-equality error
  double inclusion_distance = 0.0;   // distance from a to dc*(s), over 1 + |a|
  double singular_saturation_error = 0.0;
  double boundary_mass = 0.0;
  double duality_identity_error = 0.0;
  double lipschitz_excess = 0.0;  // max(0, max |grad u| - bound); 0 in SL
  double energy = 0.0;
  ExtReal cost;
  double objective = 0.0;
  Regime regime = Regime::superlinear;
  bool heterogeneous = false;
  int checked_points = 0;

  /// Largest of the five condition fields.
  double worst() const;
};

OptimalityReport verify_conditions(const DiscreteMeasure& mu, const AuxiliarySolution& solution,
                                   const AuxiliaryProblem& problem, const VerifyOptions& options = {});

/// Stable JSON rendering of the report (two-space indent).
std::string report_to_json(const OptimalityReport& report);

} // namespace massopt
