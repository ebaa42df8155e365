#pragma once

#include <functional>
#include <string>
#include <vector>

#include "massopt/auxiliary_solver.hpp"

namespace massopt {

/// Exact solution of a model problem. Fields are functions of the radius
/// (ball fixtures) or of x (interval fixtures).
struct ClosedFormFixture {
  std::string name;
  int dimension = 1;
  std::string source;  // "uniform 1" or "dirac <mass>"
  std::string cost;    // builtin cost name
  std::function<double(double)> u_exact;
  std::function<double(double)> a_exact;
  /// Error metrics are taken on r (or |x|) in [valid_min, valid_max].
  double valid_min = 0.0;
  double valid_max = 1.0;
  /// Radius of the ball around a source atom excluded from pointwise checks.
  double exclusion_radius = 0.0;

  /// Matching discrete problem: a radial grid for ball fixtures, (-1, 1) for
  /// interval fixtures.
  AuxiliaryProblem problem(int resolution) const;
  CostFunction cost_function() const;
  Grid grid(int resolution) const;
  SourceTerm source_term(const Grid& grid) const;
};

/// Names: "quadratic_ball_uniform(n)" for n >= 1, "quadratic_ball_dirac(n)"
/// for n in {1,2,3}, "mk_interval_uniform", "reciprocal_interval". Throws
/// Error(unknown_fixture).
ClosedFormFixture fixture(const std::string& name);
std::vector<std::string> fixture_catalog();

/// Writes node, u_exact and quadrature-point, a_exact tables in the CSV
/// format of the computed fields.
void write_fixture_fields(const ClosedFormFixture& fx, const Grid& grid, const std::string& u_path,
                          const std::string& a_path);

struct BruteForceResult {
  double objective = 0.0;
  ScalarField minimizer;
  int sweeps = 0;
};

/// Cyclic coordinate descent with exact golden-section line searches,
/// restricted to the Lipschitz box in regime L. Interval grids with at most 8
/// interior nodes; throws Error(too_large) otherwise.
BruteForceResult brute_force_min(const AuxiliaryProblem& problem);

} // namespace massopt
