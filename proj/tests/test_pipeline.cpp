#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "massopt/error.hpp"
#include "massopt/field_io.hpp"
#include "massopt/pipeline.hpp"

using namespace massopt;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config_error);
    return e.what();
  }
  FAIL("expected ConfigError");
  return {};
}

const char* kBase = R"(
[domain]
kind = interval
bounds = -1 1
resolution = 64

[cost]
builtin = quadratic

[source]
density = 1
)";

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("massopt_pipeline_" + name);
  fs::remove_all(dir);
  return dir;
}

} // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config parses into typed sections") {
  const RunConfig c = parse_config(std::string(kBase) + R"(
[solver]
method = primal_dual
gap_tolerance = 1e-6

[recovery]
schedule = 1e-1 1e-2

[verify]
exclusion_radius = 0.2
pde_residual = 1e-4
)");
  CHECK(c.domain.kind == GridKind::interval);
  CHECK(c.domain.bounds == std::vector<double>{-1.0, 1.0});
  CHECK(c.domain.resolution == std::vector<int>{64});
  CHECK(c.cost.builtin == "quadratic");
  CHECK(c.source.density == 1.0);
  CHECK(c.solver.method == SolverMethod::primal_dual);
  CHECK(c.solver.gap_tolerance == 1e-6);
  CHECK(c.recovery.regularization.schedule == std::vector<double>{1e-1, 1e-2});
  CHECK(c.verify.exclusion_radius == 0.2);
  CHECK(c.thresholds.pde_residual == 1e-4);
  CHECK(c.thresholds.boundary_mass == 1e-3);
}

TEST_CASE("config errors name the offending key") {
  const std::string base(kBase);
  CHECK(config_error("[domain]\nkind = interval\nbounds = -1 1\nresolution = -4\n[cost]\nbuiltin = quadratic\n")
            .find("domain.resolution") != std::string::npos);
  CHECK(config_error(base + "[verify]\npde_residual = 0\n").find("verify.pde_residual") != std::string::npos);
  CHECK(config_error(base + "[solver]\nmethod = newton\n").find("solver.method") != std::string::npos);
  CHECK(config_error(base + "[solver]\nmax_iterations = many\n").find("solver.max_iterations") != std::string::npos);
  CHECK(config_error(base + "[extras]\nx = 1\n").find("extras") != std::string::npos);
  CHECK(config_error("[domain]\nkind = interval\nbounds = -1 1\nresolution = 64\n[cost]\nbuiltin = quadratic\n"
                     "[source]\natoms = 0.1 0.2 0.3 0.4\n")
            .find("source.atoms") != std::string::npos);
  CHECK(config_error(base + "[source]\ndensity = 2\n").find("duplicate section") != std::string::npos);
  CHECK(config_error("[domain]\nkind = torus\n").find("domain.kind") != std::string::npos);
  CHECK(config_error("[domain]\nkind = interval\nbounds = -1 1\nresolution = 64\n[cost]\n").find("cost") !=
        std::string::npos);
  CHECK(config_error("[domain]\nkind = interval\nbounds = -1 1\nresolution = 64\n[cost]\nexpression = t\nparams = "
                     "k=1\n")
            .find("cost.params") != std::string::npos);
}

TEST_CASE("atoms and growth constants") {
  const RunConfig c = parse_config(R"(
[domain]
kind = rectangle
bounds = 0 1 0 2
resolution = 8 16
[cost]
expression = t^2/2
[source]
atoms = 0.5 0.5 1 ; 0.25 1.5 2
)");
  REQUIRE(c.source.atoms.size() == 2);
  CHECK(c.source.atoms[1].location == Point{0.25, 1.5});
  CHECK(c.source.atoms[1].mass == 2.0);
  const Grid g = build_grid(c.domain);
  CHECK(g.node_count() == 9 * 17);
  // Default minorant for t^2/2: slope 1, beta = -c*(1) = -1/2.
  const CostFunction cost = build_cost(c, g);
  CHECK(cost.growth().alpha == 1.0);
  CHECK(cost.growth().beta == doctest::Approx(-0.5).epsilon(1e-8));
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ErrorCode::config_error) == 2);
  CHECK(exit_code_for(ErrorCode::parse_error) == 2);
  CHECK(exit_code_for(ErrorCode::invalid_cost) == 2);
  CHECK(exit_code_for(ErrorCode::inadmissible_source) == 2);
  CHECK(exit_code_for(ErrorCode::not_converged) == 3);
  CHECK(exit_code_for(ErrorCode::schedule_too_short) == 3);
  CHECK(exit_code_for(ErrorCode::unbounded) == 1);
}

TEST_CASE("conjugate tables") {
  const auto quad = CostFunction(make_quadratic_cost(), {});
  const std::string t = conjugate_table(quad, {}, -1.0, 3.0, 5);
  CHECK(t.find("\n3,4.5,3,3\n") != std::string::npos);
  CHECK(t.find("\n-1,0,0,0\n") != std::string::npos);
  const auto lin = CostFunction(make_linear_cost(0.5), {});
  CHECK(conjugate_table(lin, {}, 0.5, 0.5, 1) == "s,conjugate,subdiff_lo,subdiff_hi\n0.5,0,0,+inf\n");
  CHECK(conjugate_table(lin, {}, 1.0, 1.0, 1).find("1,+inf,nan,nan") != std::string::npos);
  const auto rec = CostFunction(make_reciprocal_cost(), {});
  CHECK(conjugate_table(rec, {}, 0.0, 0.0, 1).find("\n0,-2,1,1\n") != std::string::npos);
  CHECK_THROWS_AS(conjugate_table(rec, {}, 1.0, 0.0, 3), Error);
}

TEST_CASE("expression t + 1/t behaves like the reciprocal builtin") {
  RunConfig c = parse_config(std::string(kBase));
  c.cost.builtin.clear();
  c.cost.expression = "t + 1/t";
  const Grid g = build_grid(c.domain);
  const CostFunction cost = build_cost(c, g);
  const LocalCost e = cost.at({});
  const auto ref = make_reciprocal_cost();
  for (double s : {-3.0, -0.5, 0.0, 0.5, 0.9})
    CHECK(e.conjugate(s).value() == doctest::Approx(ref->conjugate(s).value()).epsilon(1e-8));
  CHECK(e.conjugate(0.0).value() == doctest::Approx(-2.0).epsilon(1e-10));
}

TEST_CASE("run writes every artifact and passes on a fixture config") {
  const fs::path dir = scratch("run");
  RunConfig c = parse_config(std::string(kBase));
  RunOverrides o;
  o.output_directory = dir.string();
  const RunResult r = run_pipeline(c, o);
  CHECK(r.exit_code == exit_pass);
  for (const char* f : {"u_bar.csv", "measure.csv", "measure.json", "report.json", "iterations.csv"})
    CHECK(fs::exists(dir / f));
  CHECK(slurp((dir / "report.json").string()).find("\"thresholds_met\": true") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("identical configs give byte-identical CSV outputs") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  RunConfig c = parse_config(R"(
[domain]
kind = rectangle
bounds = -1 1 -1 1
resolution = 8 8
[cost]
builtin = power
params = p=3
[source]
density = 1
)");
  RunOverrides oa, ob;
  oa.output_directory = a.string();
  ob.output_directory = b.string();
  run_pipeline(c, oa);
  run_pipeline(c, ob);
  for (const char* f : {"u_bar.csv", "measure.csv", "measure.json", "iterations.csv"})
    CHECK(slurp((a / f).string()) == slurp((b / f).string()));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("exported measures re-import and score identically") {
  const fs::path dir = scratch("roundtrip");
  RunConfig c = parse_config(std::string(kBase));
  c.cost.builtin = "linear";
  c.recovery.max_density = 0.5;  // forces atoms into the export
  RunOverrides o;
  o.output_directory = dir.string();
  const RunResult r = run_pipeline(c, o);
  REQUIRE_FALSE(r.measure.atoms.empty());

  Grid g = Grid::interval(0.0, 1.0, 1);
  const DiscreteMeasure back = read_measure((dir / "measure.csv").string(), (dir / "measure.json").string(), &g);
  const Grid grid = build_grid(c.domain);
  const auto p = assemble_problem(grid, build_cost(c, grid), build_source(c.source, grid));
  const OptimalityReport again = verify_conditions(back, r.solution, p, c.verify);
  CHECK(std::abs(again.pde_residual - r.report.pde_residual) <= 1e-12);
  CHECK(std::abs(again.inclusion_violation - r.report.inclusion_violation) <= 1e-12);
  CHECK(std::abs(again.singular_saturation_error - r.report.singular_saturation_error) <= 1e-12);
  CHECK(std::abs(again.duality_identity_error - r.report.duality_identity_error) <= 1e-12);
  fs::remove_all(dir);
}

TEST_CASE("a failing cost validation is an invalid_cost error") {
  RunConfig c = parse_config(std::string(kBase));
  c.cost.builtin.clear();
  c.cost.expression = "t^0.5";
  try {
    run_pipeline(c);
    FAIL("expected InvalidCost");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_cost);
    CHECK(std::string(e.what()).find("validation") != std::string::npos);
  }
}

TEST_CASE("fixture comparison") {
  const auto cmp = compare_fixture(fixture("mk_interval_uniform"), 256);
  CHECK(cmp.u_linf_error <= 1e-12);
  CHECK(cmp.a_l1_error <= 0.03);
  CHECK(cmp.max_gradient <= 1.0 + 1e-9);
  CHECK(cmp.report.worst() <= 1e-3);
}

}
