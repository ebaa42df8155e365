// massopt: solve, recover and verify mass optimization problems from a config.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "massopt/error.hpp"
#include "massopt/field_io.hpp"
#include "massopt/pipeline.hpp"

using namespace massopt;

namespace {

void print_report(const OptimalityReport& r) {
  std::printf("  pde_residual               %.3e\n", r.pde_residual);
  std::printf("  inclusion_violation        %.3e\n", r.inclusion_violation);
  std::printf("  singular_saturation_error  %.3e\n", r.singular_saturation_error);
  std::printf("  boundary_mass              %.3e\n", r.boundary_mass);
  std::printf("  duality_identity_error     %.3e\n", r.duality_identity_error);
}

int cmd_run(const std::string& config_path, const RunOverrides& overrides) {
  const RunConfig config = load_config(config_path);
  const RunResult res = run_pipeline(config, overrides);
  std::printf("solver %s: %d iterations, relative gap %.3e%s\n",
              std::string(to_string(res.solution.method)).c_str(), res.solution.iterations,
              res.solution.relative_gap, res.solution.status == SolveStatus::converged ? "" : " (not converged)");
  std::printf("objective %.12g, energy %.12g, cost %s\n", res.solution.objective, res.report.energy,
              format_double(res.report.cost.value()).c_str());
  print_report(res.report);
  for (const auto& f : res.failed_thresholds) std::printf("threshold failed: %s\n", f.c_str());
  for (const auto& path : res.written) std::printf("wrote %s\n", path.c_str());
  return res.exit_code;
}

int cmd_conjugate(const std::string& config_path, const std::vector<double>& range, int count,
                  const std::vector<double>& at, const std::string& output) {
  const RunConfig config = load_config(config_path);
  const Grid grid = build_grid(config.domain);
  const CostFunction cost = build_cost(config, grid);
  const Point x{at.size() > 0 ? at[0] : 0.0, at.size() > 1 ? at[1] : 0.0};
  const std::string table = conjugate_table(cost, x, range[0], range[1], count);
  if (output.empty()) {
    std::cout << table;
  } else {
    std::ofstream out(output);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + output);
    out << table;
  }
  return exit_pass;
}

struct FixtureTolerance {
  double u_linf;
  double a_l1;
  double a_max;
};

FixtureTolerance tolerance_for(const std::string& name) {
  if (name.rfind("quadratic_ball_dirac", 0) == 0) return {kInf, kInf, 0.05};
  if (name == "mk_interval_uniform") return {0.01, 0.03, kInf};
  return {0.01, 0.02, kInf};
}

int cmd_fixtures(const std::string& name, int resolution, const RunOverrides& overrides) {
  const std::vector<std::string> names = name == "all" ? fixture_catalog() : std::vector<std::string>{name};
  bool all_pass = true, converged = true;
  for (const auto& n : names) {
    const ClosedFormFixture fx = fixture(n);
    const FixtureComparison cmp = compare_fixture(fx, resolution);
    const FixtureTolerance tol = tolerance_for(n);
    const bool pass = cmp.u_linf_error <= tol.u_linf && cmp.a_l1_error <= tol.a_l1 && cmp.a_max_error <= tol.a_max &&
                      cmp.report.worst() <= 1e-3;
    converged = converged && cmp.solution.status == SolveStatus::converged;
    all_pass = all_pass && pass;
    std::printf("%s N=%d  %s  (%.3f s)\n", n.c_str(), resolution, pass ? "PASS" : "FAIL", cmp.seconds);
    std::printf("  u_linf_error               %.3e\n", cmp.u_linf_error);
    std::printf("  a_l1_error                 %.3e\n", cmp.a_l1_error);
    std::printf("  a_max_error                %.3e\n", cmp.a_max_error);
    print_report(cmp.report);
    if (overrides.report_path) {
      std::ofstream out(*overrides.report_path);
      if (!out) throw Error(ErrorCode::io_error, "cannot write " + *overrides.report_path);
      out << report_to_json(cmp.report);
    }
    if (overrides.log_path) write_iteration_log(*overrides.log_path, cmp.solution);
  }
  if (!converged) return exit_not_converged;
  return all_pass ? exit_pass : exit_thresholds;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal conductivity for convex costs: solve, recover, verify."};
  app.require_subcommand(1);
  std::string log_path, report_path;
  app.add_option("--log", log_path, "Write the iteration log (CSV) to this path");
  app.add_option("--json-report", report_path, "Write the optimality report (JSON) to this path");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the full pipeline on a config file");
  run->add_option("config", config_path, "Config file")->required();
  std::string output_dir;
  run->add_option("--output-dir", output_dir, "Write artifacts here instead of the config's output.directory");
  run->fallthrough();

  std::vector<double> range{-1.0, 3.0}, at;
  int count = 5;
  std::string table_output;
  auto* conj = app.add_subcommand("conjugate", "Tabulate c*(s) and its subdifferential for the config's cost");
  conj->add_option("config", config_path, "Config file")->required();
  conj->add_option("--range", range, "Interval of s")->expected(2);
  conj->add_option("--count", count, "Number of rows");
  conj->add_option("--at", at, "Point x (for heterogeneous costs)")->expected(1, 2);
  conj->add_option("--output", table_output, "Write the CSV here instead of stdout");
  conj->fallthrough();

  std::string fixture_name = "all";
  int resolution = 2048;
  auto* fix = app.add_subcommand("fixtures", "Compare the pipeline against a closed-form fixture");
  fix->add_option("--name", fixture_name, "Fixture name, or 'all'");
  fix->add_option("--resolution", resolution, "Grid resolution N")->check(CLI::Range(8, 1 << 24));
  fix->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_pass : exit_config;
  }

  RunOverrides overrides;
  if (!output_dir.empty()) overrides.output_directory = output_dir;
  if (!log_path.empty()) overrides.log_path = log_path;
  if (!report_path.empty()) overrides.report_path = report_path;
  try {
    if (*run) return cmd_run(config_path, overrides);
    if (*conj) return cmd_conjugate(config_path, range, count, at, table_output);
    return cmd_fixtures(fixture_name, resolution, overrides);
  } catch (const Error& e) {
    std::fprintf(stderr, "massopt: %s\n", e.what());
    return exit_code_for(e.code());
  }
}
