#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "massopt/error.hpp"
#include "massopt/field_io.hpp"
#include "massopt/grid.hpp"

using namespace massopt;

namespace {

ScalarField nodal(const Grid& g, auto&& fn) {
  ScalarField u = ScalarField::zeros(g);
  for (std::size_t i = 0; i < g.node_count(); ++i) u[i] = fn(g.node(i));
  return u;
}

double max_gradient_error_1d(int cells) {
  const Grid g = Grid::interval(-1.0, 1.0, cells);
  const auto u = nodal(g, [](const Point& p) { return std::sin(2.0 * p[0]) + 1.0 - p[0] * p[0]; });
  const VectorField du = gradient(g, u);
  double err = 0.0;
  for (std::size_t q = 0; q < g.quadrature_count(); ++q) {
    const double x = g.quadrature_point(q)[0];
    err = std::max(err, std::abs(du.at(q)[0] - (2.0 * std::cos(2.0 * x) - 2.0 * x)));
  }
  return err;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("massopt_test_" + name)).string();
}

} // namespace

TEST_SUITE("discretization") {

TEST_CASE("interval grid structure") {
  const Grid g = Grid::interval(-1.0, 1.0, 8);
  CHECK(g.node_count() == 9);
  CHECK(g.cell_count() == 8);
  CHECK(g.on_boundary(0));
  CHECK(g.on_boundary(8));
  for (std::size_t i = 1; i < 8; ++i) CHECK_FALSE(g.on_boundary(i));
  double total = 0.0;
  for (double v : g.cell_volumes()) {
    CHECK(v > 0.0);
    total += v;
  }
  CHECK(total == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("rectangle boundary mask marks exactly the edges") {
  const Grid g = Grid::rectangle(0.0, 2.0, 0.0, 1.0, 4, 3);
  int boundary = 0;
  for (std::size_t i = 0; i < g.node_count(); ++i) boundary += g.on_boundary(i);
  CHECK(boundary == 2 * (5 + 4) - 4);
  double total = 0.0;
  for (double v : g.cell_volumes()) total += v;
  CHECK(total == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(g.quadrature_count() == 4 * 12);
}

TEST_CASE("radial cell volumes sum to the ball volume") {
  for (int n : {1, 2, 3}) {
    const Grid g = Grid::radial(1.5, 333, n);
    double total = 0.0;
    for (double v : g.cell_volumes()) total += v;
    const double exact = n == 1 ? 3.0 : n == 2 ? std::numbers::pi * 1.5 * 1.5 : 4.0 / 3.0 * std::numbers::pi * std::pow(1.5, 3);
    CHECK(std::abs(total - exact) <= 1e-10 * exact);
    CHECK(g.on_boundary(g.node_count() - 1));
    CHECK_FALSE(g.on_boundary(0));
  }
}

TEST_CASE("gradient of polynomials") {
  const Grid g = Grid::interval(-1.0, 1.0, 64);
  const auto u = nodal(g, [](const Point& p) { return 1.0 - p[0] * p[0]; });
  const VectorField du = gradient(g, u);
  for (std::size_t q = 0; q < g.quadrature_count(); ++q)
    CHECK(du.at(q)[0] == doctest::Approx(-2.0 * g.quadrature_point(q)[0]).epsilon(1e-12));

  const VectorField zero = gradient(g, ScalarField::zeros(g));
  for (double v : zero.values) CHECK(v == 0.0);

  const Grid r = Grid::rectangle(-1.0, 1.0, -1.0, 1.0, 16, 16);
  const auto w = nodal(r, [](const Point& p) { return p[0] * p[1]; });
  const VectorField dw = gradient(r, w);
  for (std::size_t q = 0; q < r.quadrature_count(); ++q) {
    const Point& x = r.quadrature_point(q);
    CHECK(dw.at(q)[0] == doctest::Approx(x[1]).epsilon(1e-12));
    CHECK(dw.at(q)[1] == doctest::Approx(x[0]).epsilon(1e-12));
  }
}

TEST_CASE("gradient convergence order is at least 1.9") {
  const double e1 = max_gradient_error_1d(64), e2 = max_gradient_error_1d(128), e3 = max_gradient_error_1d(256);
  CHECK(std::log2(e1 / e2) >= 1.9);
  CHECK(std::log2(e2 / e3) >= 1.9);

  auto rect_error = [](int cells) {
    const Grid g = Grid::rectangle(0.0, 1.0, 0.0, 1.0, cells, cells);
    const auto u = nodal(g, [](const Point& p) { return std::sin(p[0]) * std::exp(p[1]); });
    const VectorField du = gradient(g, u);
    double err = 0.0;
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
      // Cell-averaged gradient against the value at the cell centre.
      double gx = 0.0, gy = 0.0, cx = 0.0, cy = 0.0;
      for (std::size_t k = 0; k < 4; ++k) {
        gx += 0.25 * du.at(4 * c + k)[0];
        gy += 0.25 * du.at(4 * c + k)[1];
        cx += 0.25 * g.quadrature_point(4 * c + k)[0];
        cy += 0.25 * g.quadrature_point(4 * c + k)[1];
      }
      err = std::max({err, std::abs(gx - std::cos(cx) * std::exp(cy)), std::abs(gy - std::sin(cx) * std::exp(cy))});
    }
    return err;
  };
  CHECK(std::log2(rect_error(16) / rect_error(32)) >= 1.9);
}

TEST_CASE("weak divergence of sigma = -x reproduces the unit load") {
  const Grid g = Grid::interval(-1.0, 1.0, 32);
  VectorField sigma = VectorField::zeros(g);
  for (std::size_t q = 0; q < g.quadrature_count(); ++q) sigma.at(q)[0] = -g.quadrature_point(q)[0];
  const auto div = divergence_weighted(g, DiscreteMeasure::lebesgue(g), sigma);
  const auto b = load_vector(g, SourceTerm::constant(g, 1.0));
  for (std::size_t i = 1; i + 1 < g.node_count(); ++i) CHECK(-div[i] == doctest::Approx(b[i]).epsilon(1e-12));

  const auto zero = divergence_weighted(g, DiscreteMeasure::lebesgue(g), VectorField::zeros(g));
  for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("weak divergence of a single atom") {
  const Grid g = Grid::interval(-1.0, 1.0, 10);
  DiscreteMeasure mu{std::vector<double>(g.quadrature_count(), 0.0), {{{0.05, 0.0}, 1.0}}, 0.0};
  VectorField sigma = VectorField::zeros(g);
  for (std::size_t q = 0; q < g.quadrature_count(); ++q) sigma.at(q)[0] = 2.0;
  const auto div = divergence_weighted(g, mu, sigma);
  // Atom in cell [0, 0.2]: hats of nodes 5 and 6 have slopes -5 and +5.
  CHECK(div[5] == doctest::Approx(10.0));
  CHECK(div[6] == doctest::Approx(-10.0));
  CHECK(div[4] == 0.0);

  DiscreteMeasure outside = mu;
  outside.atoms[0].location = {1.5, 0.0};
  CHECK_THROWS_AS(divergence_weighted(g, outside, sigma), Error);
}

TEST_CASE("adjointness of gradient and weak divergence") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(-1.0, 1.0), pos(0.1, 2.0);
  for (const Grid& g : {Grid::interval(-1.0, 2.0, 17), Grid::radial(1.0, 23, 3), Grid::rectangle(0, 1, 0, 2, 5, 7)}) {
    ScalarField u = ScalarField::zeros(g);
    for (std::size_t i = 0; i < g.node_count(); ++i) u[i] = g.on_boundary(i) ? 0.0 : uni(rng);
    VectorField sigma = VectorField::zeros(g);
    for (double& v : sigma.values) v = uni(rng);
    DiscreteMeasure mu = DiscreteMeasure::lebesgue(g);
    for (double& a : mu.density) a = pos(rng);
    mu.atoms.push_back({g.quadrature_point(3), 0.7});
    mu.atoms.push_back({g.node(2), 0.3});

    const auto div = divergence_weighted(g, mu, sigma);
    double lhs = 0.0;
    for (std::size_t i = 0; i < g.node_count(); ++i) lhs += u[i] * div[i];

    const VectorField du = gradient(g, u);
    double rhs = 0.0;
    for (std::size_t q = 0; q < g.quadrature_count(); ++q) {
      double dot = 0.0;
      for (int k = 0; k < du.components; ++k) dot += sigma.at(q)[k] * du.at(q)[k];
      rhs -= g.quadrature_weight(q) * mu.density[q] * dot;
    }
    for (const Atom& a : mu.atoms) {
      const auto s = sample_vector(g, sigma, a.location);
      const auto gu = gradient_at(g, u, a.location);
      rhs -= a.mass * (s[0] * gu[0] + s[1] * gu[1]);
    }
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(lhs) + std::abs(rhs)));
  }
}

TEST_CASE("source pairing examples") {
  const Grid g = Grid::interval(-1.0, 1.0, 256);
  const auto u = nodal(g, [](const Point& p) { return 0.5 * (1.0 - p[0] * p[0]); });
  CHECK(std::abs(pair_source(g, SourceTerm::constant(g, 1.0), u) - 2.0 / 3.0) <= 1e-4);

  SourceTerm dirac{ScalarField::zeros(g), {{{0.0, 0.0}, 1.0}}};
  const auto hat = nodal(g, [](const Point& p) { return 1.0 - std::abs(p[0]); });
  CHECK(pair_source(g, dirac, hat) == doctest::Approx(1.0).epsilon(1e-14));

  SourceTerm balanced = SourceTerm::from_expression(g, Expression::parse("x", {"x", "y"}));
  CHECK(balanced.total_mass(g) == doctest::Approx(0.0).scale(1.0));
  const auto ones = nodal(g, [](const Point&) { return 1.0; });
  CHECK(std::abs(pair_source(g, balanced, ones)) <= 1e-14);
}

TEST_CASE("source pairing is linear in u") {
  const Grid g = Grid::rectangle(0, 1, 0, 1, 6, 6);
  SourceTerm f = SourceTerm::from_expression(g, Expression::parse("1 + x - y", {"x", "y"}));
  f.atoms.push_back({{0.3, 0.4}, -0.5});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  ScalarField u = ScalarField::zeros(g), v = ScalarField::zeros(g), w = ScalarField::zeros(g);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    u[i] = uni(rng);
    v[i] = uni(rng);
    w[i] = 2.0 * u[i] - 3.0 * v[i];
  }
  CHECK(pair_source(g, f, w) == doctest::Approx(2.0 * pair_source(g, f, u) - 3.0 * pair_source(g, f, v)));
}

TEST_CASE("radial load of the unit source is the ball volume") {
  const Grid g = Grid::radial(1.0, 40, 3);
  const auto b = load_vector(g, SourceTerm::constant(g, 1.0));
  double total = 0.0;
  for (double v : b) total += v;
  CHECK(total == doctest::Approx(4.0 / 3.0 * std::numbers::pi).epsilon(1e-13));
}

TEST_CASE("stencils at nodes average adjacent cells") {
  const Grid g = Grid::interval(0.0, 1.0, 4);
  const auto u = nodal(g, [](const Point& p) { return p[0] * p[0]; });
  // Node 0.5: slopes 0.75 and 1.25 on the adjacent cells.
  CHECK(gradient_at(g, u, {0.5, 0.0})[0] == doctest::Approx(1.0));
  CHECK(interpolate(g, u, {0.5, 0.0}) == doctest::Approx(0.25));
  const Grid r = Grid::radial(1.0, 4, 2);
  const auto ur = nodal(r, [](const Point& p) { return 1.0 - p[0]; });
  CHECK(gradient_at(r, ur, {0.0, 0.0})[0] == 0.0);
  CHECK(interpolate(r, ur, {0.0, 0.0}) == 1.0);
}

TEST_CASE("source atoms must lie strictly inside") {
  const Grid g = Grid::interval(-1.0, 1.0, 8);
  SourceTerm f{ScalarField::zeros(g), {{{1.0, 0.0}, 1.0}}};
  try {
    check_source(g, f);
    FAIL("expected AtomOutsideGrid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::atom_outside_grid);
  }
  f.atoms[0].location = {0.3, 0.0};
  CHECK_NOTHROW(check_source(g, f));
  const Grid r = Grid::radial(1.0, 8, 2);
  CHECK_NOTHROW(check_source(r, SourceTerm{ScalarField::zeros(r), {{{0.0, 0.0}, 1.0}}}));
}

TEST_CASE("measure validation and total variation") {
  const Grid g = Grid::interval(0.0, 2.0, 4);
  DiscreteMeasure mu = DiscreteMeasure::lebesgue(g, 0.5);
  mu.atoms.push_back({{1.0, 0.0}, 0.25});
  CHECK(mu.total_variation(g) == doctest::Approx(1.25));
  CHECK(mu.scaled(2.0).total_variation(g) == doctest::Approx(2.5));
  mu.density[0] = -1.0;
  CHECK_THROWS_AS(check_measure(g, mu), Error);
}

TEST_CASE("field and measure files round-trip exactly") {
  const Grid g = Grid::rectangle(-1.0, 1.0, 0.0, 0.3, 5, 3);
  const auto u = nodal(g, [](const Point& p) { return std::exp(p[0]) / 3.0 + p[1]; });
  const std::string field = temp_path("field.csv");
  write_field_csv(field, g, u);
  Grid back;
  const ScalarField v = read_field_csv(field, &back);
  CHECK(back.describe() == g.describe());
  CHECK(v.values == u.values);

  DiscreteMeasure mu = DiscreteMeasure::lebesgue(g);
  for (std::size_t q = 0; q < mu.density.size(); ++q) mu.density[q] = 1.0 / (1.0 + q);
  mu.atoms.push_back({{0.1, 0.2}, 1.0 / 7.0});
  const std::string csv = temp_path("measure.csv"), json = temp_path("measure.json");
  write_measure(csv, json, g, mu);
  const DiscreteMeasure nu = read_measure(csv, json);
  CHECK(nu.density == mu.density);
  REQUIRE(nu.atoms.size() == 1);
  CHECK(nu.atoms[0].mass == mu.atoms[0].mass);
  CHECK(nu.atoms[0].location == mu.atoms[0].location);
  std::filesystem::remove(field);
  std::filesystem::remove(csv);
  std::filesystem::remove(json);
}

TEST_CASE("grid descriptions round-trip") {
  for (const Grid& g : {Grid::interval(-1, 1, 7), Grid::radial(0.75, 9, 3), Grid::rectangle(0, 1, 2, 3, 4, 5)})
    CHECK(Grid::from_description(g.describe()).describe() == g.describe());
  CHECK_THROWS_AS(Grid::from_description("torus 1 2"), Error);
}

} // TEST_SUITE
