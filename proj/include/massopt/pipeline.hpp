#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "massopt/oracle.hpp"
#include "massopt/recovery.hpp"

namespace massopt {

struct DomainConfig {
  GridKind kind = GridKind::interval;
  std::vector<double> bounds;     // interval: a b; rectangle: ax bx ay by; radial: R
  std::vector<int> resolution;    // one entry, or nx ny for rectangles
  int dimension = 1;              // radial grids only
};

struct CostConfig {
  // Exactly one of builtin, expression, table_path.
  std::string builtin;
  std::vector<std::pair<std::string, double>> params;
  std::string expression;
  std::string table_path;
  std::string weight_expression;
  std::string weight_table_path;
  std::optional<GrowthConstants> growth;
};

struct SourceConfig {
  double density = 0.0;
  std::string density_expression;  // in x, y; replaces `density` when set
  std::vector<Atom> atoms;
};

enum class RecoveryMethod { automatic, superlinear, flux_inversion, regularization };

struct RecoveryConfig {
  RecoveryMethod method = RecoveryMethod::automatic;
  double max_density = kInf;
  RegularizationOptions regularization;
};

struct Thresholds {
  double pde_residual = 1e-3;
  double inclusion_violation = 1e-3;
  double singular_saturation_error = 1e-3;
  double boundary_mass = 1e-3;
  double duality_identity_error = 1e-3;
};

struct OutputConfig {
  std::string directory = ".";
  std::string u_field = "u_bar.csv";
  std::string measure_csv = "measure.csv";
  std::string measure_json = "measure.json";
  std::string report = "report.json";
  std::string log = "iterations.csv";
};

struct RunConfig {
  DomainConfig domain;
  CostConfig cost;
  SourceConfig source;
  SolverParams solver;
  RecoveryConfig recovery;
  Thresholds thresholds;
  VerifyOptions verify;
  OutputConfig output;
  std::string base_directory;  // relative input and output paths resolve here
};

/// Parses the INI-style config. Throws Error(config_error) naming the
/// offending section.key, or Error(parse_error) for malformed expressions.
RunConfig parse_config(const std::string& text, const std::string& base_directory = ".");
RunConfig load_config(const std::string& path);

Grid build_grid(const DomainConfig& domain);
/// Builds the cost; growth constants default to alpha = min(1, c_inf/2) and
/// beta = -c*(alpha) when not given, the tightest affine minorant with that slope.
CostFunction build_cost(const RunConfig& config, const Grid& grid);
SourceTerm build_source(const SourceConfig& source, const Grid& grid);

enum ExitCode : int { exit_pass = 0, exit_thresholds = 1, exit_config = 2, exit_not_converged = 3 };

/// Maps a library error to the CLI exit code.
int exit_code_for(ErrorCode code);

struct RunResult {
  int exit_code = exit_pass;
  AuxiliarySolution solution;
  DiscreteMeasure measure;
  OptimalityReport report;
  ValidationReport validation;
  std::vector<std::string> failed_thresholds;
  std::vector<std::string> written;  // artifact paths
};

struct RunOverrides {
  std::optional<std::string> output_directory;
  std::optional<std::string> log_path;
  std::optional<std::string> report_path;
};

/// validate -> solve -> recover -> verify -> export. Throws Error for
/// configuration and pipeline failures; a solver that stops short of the gap
/// tolerance yields exit_not_converged with all artifacts written.
RunResult run_pipeline(const RunConfig& config, const RunOverrides& overrides = {});

bool thresholds_met(const OptimalityReport& report, const Thresholds& t, std::vector<std::string>* failed = nullptr);

/// Rows (s, c*(s), D-c*(s), D+c*(s)) at `count` evenly spaced s in [lo, hi].
std::string conjugate_table(const CostFunction& cost, const Point& x, double lo, double hi, int count);

struct FixtureComparison {
  std::string name;
  int resolution = 0;
  double u_linf_error = 0.0;  // relative to max |u_exact|
  double a_l1_error = 0.0;    // relative, on the validity region
  double a_max_error = 0.0;   // pointwise relative, where a_exact >= 1% of its maximum
  double max_gradient = 0.0;
  double seconds = 0.0;
  AuxiliarySolution solution;
  DiscreteMeasure measure;
  OptimalityReport report;
};

/// Solves the fixture's discrete problem, recovers the measure and compares
/// both against the exact fields.
FixtureComparison compare_fixture(const ClosedFormFixture& fx, int resolution, const SolverParams& params = {});

} // namespace massopt
