#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "massopt/error.hpp"
#include "massopt/field_io.hpp"
#include "massopt/oracle.hpp"
#include "massopt/recovery.hpp"

using namespace massopt;

namespace {

CostFunction builtin(const std::string& name, std::vector<std::pair<std::string, double>> params = {}) {
  return CostFunction(make_builtin_cost(name, params), default_growth(name, params));
}

} // namespace

TEST_SUITE("oracle") {

TEST_CASE("fixture values") {
  CHECK(fixture("quadratic_ball_uniform(2)").u_exact(0.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(fixture("quadratic_ball_uniform(1)").u_exact(0.0) == doctest::Approx(0.94494).epsilon(1e-5));
  const auto dirac = fixture("quadratic_ball_dirac(2)");
  for (double r : {0.1, 0.4, 0.9}) CHECK(dirac.a_exact(r) == doctest::Approx(std::pow(2.0, -1.0 / 3.0) / std::cbrt(r * r)));
  CHECK(dirac.exclusion_radius == 0.1);
  CHECK(fixture("mk_interval_uniform").a_exact(-0.25) == 0.25);
}

TEST_CASE("exact fields vanish on the boundary and densities are nonnegative") {
  for (const auto& name : fixture_catalog()) {
    const auto fx = fixture(name);
    CHECK(std::abs(fx.u_exact(1.0)) <= 1e-14);
    CHECK(std::abs(fx.u_exact(-1.0)) <= 1e-14);
    for (double r = std::max(fx.valid_min, 0.01); r <= fx.valid_max; r += 0.07) CHECK(fx.a_exact(r) >= 0.0);
  }
}

TEST_CASE("unknown fixture names are rejected") {
  for (const char* name : {"quadratic_ball_dirac(4)", "quadratic_ball_uniform(0)", "nope"}) {
    try {
      fixture(name);
      FAIL("expected UnknownFixture");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::unknown_fixture);
    }
  }
}

TEST_CASE("Dirac fixture mass gives a flux of |S^{n-1}| r^{n-1} a u' = -|S^{n-1}|") {
  for (int n : {2, 3}) {
    const auto fx = fixture("quadratic_ball_dirac(" + std::to_string(n) + ")");
    const double r = 0.5, h = 1e-6;
    const double du = (fx.u_exact(r + h) - fx.u_exact(r - h)) / (2.0 * h);
    CHECK(fx.a_exact(r) * du * std::pow(r, n - 1) == doctest::Approx(-1.0).epsilon(1e-8));
  }
}

TEST_CASE("quadratic fixtures satisfy the strong 4-Laplace equation away from 0") {
  // -div(|grad u|^2 grad u) = 2 f in radial form.
  const auto fx = fixture("quadratic_ball_uniform(3)");
  const int n = 3;
  auto flux = [&](double r) {
    const double h = 1e-5;
    const double du = (fx.u_exact(r + h) - fx.u_exact(r - h)) / (2.0 * h);
    return std::pow(r, n - 1) * du * du * du;
  };
  for (double r : {0.2, 0.5, 0.8}) {
    const double h = 1e-3;
    const double lap = (flux(r + h) - flux(r - h)) / (2.0 * h) / std::pow(r, n - 1);
    CHECK(-lap == doctest::Approx(2.0).epsilon(1e-4));
  }
}

TEST_CASE("fixtures export in the computed-field CSV format") {
  const auto dir = std::filesystem::temp_directory_path() / "massopt_oracle_test";
  std::filesystem::create_directories(dir);
  const auto fx = fixture("quadratic_ball_uniform(2)");
  const Grid g = fx.grid(32);
  write_fixture_fields(fx, g, (dir / "u.csv").string(), (dir / "a.csv").string());
  Grid back = Grid::interval(0.0, 1.0, 1);
  const ScalarField u = read_field_csv((dir / "u.csv").string(), &back);
  CHECK(back.describe() == g.describe());
  CHECK(u[0] == doctest::Approx(0.75));
  std::filesystem::remove_all(dir);
}

TEST_CASE("brute force agrees with the solver, f = 1, quadratic, N = 4") {
  const Grid g = Grid::interval(-1.0, 1.0, 4);
  const auto p = assemble_problem(g, builtin("quadratic"), SourceTerm::constant(g, 1.0));
  const auto bf = brute_force_min(p);
  CHECK(bf.objective == doctest::Approx(solve_auxiliary(p).objective).epsilon(1e-6));
}

TEST_CASE("brute force with zero source returns zero") {
  const Grid g = Grid::interval(0.0, 2.0, 6);
  const auto p = assemble_problem(g, builtin("reciprocal"), SourceTerm::constant(g, 0.0));
  const auto bf = brute_force_min(p);
  for (double v : bf.minimizer.values) CHECK(v == 0.0);
  // sum vol c*(0) = 2 * (-2).
  CHECK(bf.objective == doctest::Approx(-4.0).epsilon(1e-14));
}

TEST_CASE("brute force stays in the feasible box in regime L") {
  const Grid g = Grid::interval(-1.0, 1.0, 8);
  const auto p = assemble_problem(g, builtin("linear"), SourceTerm::constant(g, 1.0));
  const auto bf = brute_force_min(p);
  CHECK(objective_eval(p, bf.minimizer).is_finite());
  const VectorField du = gradient(g, bf.minimizer);
  for (std::size_t q = 0; q < du.size(); ++q) CHECK(du.norm_at(q) <= 1.0 + 1e-12);
  CHECK(bf.objective == doctest::Approx(solve_auxiliary(p).objective).epsilon(1e-6));
}

TEST_CASE("brute force refuses large or non-interval grids") {
  const Grid big = Grid::interval(0.0, 1.0, 10);
  const auto p = assemble_problem(big, builtin("quadratic"), SourceTerm::constant(big, 1.0));
  try {
    brute_force_min(p);
    FAIL("expected TooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::too_large);
  }
}

TEST_CASE("fixture pairs pass verification") {
  const auto fx = fixture("reciprocal_interval");
  const auto p = fx.problem(1024);
  const auto s = solve_auxiliary(p);
  double err = 0.0;
  for (std::size_t i = 0; i < p.grid.node_count(); ++i)
    err = std::max(err, std::abs(s.u_bar[i] - fx.u_exact(p.grid.node(i)[0])));
  CHECK(err <= 1e-5);
  const auto r = verify_conditions(recover_measure_L_1d(s, p), s, p);
  CHECK(r.worst() <= 1e-3);
}

}
