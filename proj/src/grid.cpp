#include "massopt/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "massopt/error.hpp"

namespace massopt {

namespace {

constexpr double kGauss2 = 0.57735026918962576451;  // 1/sqrt(3)
constexpr std::array<double, 3> kGauss3Nodes{-0.77459666924148337704, 0.0, 0.77459666924148337704};
constexpr std::array<double, 3> kGauss3Weights{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::unsupported_grid, msg);
}

// Cells containing coordinate x on a uniform axis with `cells` cells; empty
// outside [lo, hi]. A coordinate on an interior node belongs to both
// neighbours.
std::vector<std::size_t> cells_containing(double lo, double hi, int cells, double x) {
  const double h = (hi - lo) / cells;
  const double tol = 1e-12 * h;
  if (x < lo - tol || x > hi + tol) return {};
  const double t = (x - lo) / h;
  const double nearest = std::round(t);
  std::vector<std::size_t> out;
  if (std::abs(t - nearest) * h <= tol) {
    const int k = static_cast<int>(nearest);
    if (k - 1 >= 0) out.push_back(static_cast<std::size_t>(k - 1));
    if (k < cells) out.push_back(static_cast<std::size_t>(k));
  } else {
    out.push_back(static_cast<std::size_t>(std::clamp(static_cast<int>(std::floor(t)), 0, cells - 1)));
  }
  return out;
}

void accumulate(PointStencil& into, const PointStencil& add, double scale) {
  for (const StencilTerm& t : add) {
    auto it = std::find_if(into.begin(), into.end(), [&](const StencilTerm& s) { return s.node == t.node; });
    if (it == into.end()) {
      into.push_back({t.node, scale * t.value, {scale * t.grad[0], scale * t.grad[1]}});
    } else {
      it->value += scale * t.value;
      it->grad[0] += scale * t.grad[0];
      it->grad[1] += scale * t.grad[1];
    }
  }
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

Grid Grid::interval(double a, double b, int cells) {
  require(cells >= 1 && b > a, "interval needs b > a and at least one cell");
  Grid g;
  g.kind_ = GridKind::interval;
  g.dimension_ = 1;
  g.bounds_ = {a, b};
  g.resolution_ = {cells};
  const double h = (b - a) / cells;
  for (int i = 0; i <= cells; ++i) g.coords_x_.push_back(i == cells ? b : a + i * h);
  for (int i = 0; i < cells; ++i) g.cell_volumes_.push_back(g.coords_x_[i + 1] - g.coords_x_[i]);
  g.finish_1d();
  g.boundary_.front() = 1;
  g.boundary_.back() = 1;
  return g;
}

Grid Grid::radial(double radius, int cells, int dimension) {
  require(cells >= 1 && radius > 0.0, "radial grid needs R > 0 and at least one cell");
  require(dimension >= 1, "radial grid needs dimension >= 1");
  Grid g;
  g.kind_ = GridKind::radial;
  g.dimension_ = dimension;
  g.bounds_ = {radius};
  g.resolution_ = {cells, dimension};
  const double h = radius / cells;
  for (int i = 0; i <= cells; ++i) g.coords_x_.push_back(i == cells ? radius : i * h);
  const double omega = unit_sphere_area(dimension);
  for (int i = 0; i < cells; ++i) {
    const double r0 = g.coords_x_[i], r1 = g.coords_x_[i + 1];
    g.cell_volumes_.push_back(omega * (std::pow(r1, dimension) - std::pow(r0, dimension)) / dimension);
  }
  g.finish_1d();
  g.boundary_.back() = 1;
  return g;
}

void Grid::finish_1d() {
  const std::size_t n = coords_x_.size();
  for (double x : coords_x_) nodes_.push_back({x, 0.0});
  boundary_.assign(n, 0);
  for (std::size_t c = 0; c + 1 < n; ++c) {
    const double mid = 0.5 * (coords_x_[c] + coords_x_[c + 1]);
    quad_points_.push_back({mid, 0.0});
    quad_weights_.push_back(cell_volumes_[c]);
    quad_cell_.push_back(c);
    quad_stencils_.push_back(stencil_1d(c, mid));
  }
}

Grid Grid::rectangle(double ax, double bx, double ay, double by, int nx, int ny) {
  require(nx >= 1 && ny >= 1 && bx > ax && by > ay, "rectangle needs positive extents and cell counts");
  Grid g;
  g.kind_ = GridKind::rectangle;
  g.dimension_ = 2;
  g.bounds_ = {ax, bx, ay, by};
  g.resolution_ = {nx, ny};
  const double hx = (bx - ax) / nx, hy = (by - ay) / ny;
  for (int i = 0; i <= nx; ++i) g.coords_x_.push_back(i == nx ? bx : ax + i * hx);
  for (int j = 0; j <= ny; ++j) g.coords_y_.push_back(j == ny ? by : ay + j * hy);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      g.nodes_.push_back({g.coords_x_[i], g.coords_y_[j]});
      g.boundary_.push_back(i == 0 || j == 0 || i == nx || j == ny ? 1 : 0);
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double x0 = g.coords_x_[i], x1 = g.coords_x_[i + 1];
      const double y0 = g.coords_y_[j], y1 = g.coords_y_[j + 1];
      const double vol = (x1 - x0) * (y1 - y0);
      const std::size_t cell = g.cell_volumes_.size();
      g.cell_volumes_.push_back(vol);
      for (double sy : {-kGauss2, kGauss2})
        for (double sx : {-kGauss2, kGauss2}) {
          const double x = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * sx;
          const double y = 0.5 * (y0 + y1) + 0.5 * (y1 - y0) * sy;
          g.quad_points_.push_back({x, y});
          g.quad_weights_.push_back(0.25 * vol);
          g.quad_cell_.push_back(cell);
          g.quad_stencils_.push_back(g.stencil_2d(i, j, x, y));
        }
    }
  return g;
}

PointStencil Grid::stencil_1d(std::size_t cell, double x) const {
  const double x0 = coords_x_[cell], x1 = coords_x_[cell + 1];
  const double h = x1 - x0;
  const double t = (x - x0) / h;
  return {{cell, 1.0 - t, {-1.0 / h, 0.0}}, {cell + 1, t, {1.0 / h, 0.0}}};
}

PointStencil Grid::stencil_2d(std::size_t ix, std::size_t iy, double x, double y) const {
  const std::size_t stride = coords_x_.size();
  const double x0 = coords_x_[ix], x1 = coords_x_[ix + 1];
  const double y0 = coords_y_[iy], y1 = coords_y_[iy + 1];
  const double hx = x1 - x0, hy = y1 - y0;
  const double s = (x - x0) / hx, t = (y - y0) / hy;
  const std::size_t n00 = ix + iy * stride;
  return {
      {n00, (1 - s) * (1 - t), {-(1 - t) / hx, -(1 - s) / hy}},
      {n00 + 1, s * (1 - t), {(1 - t) / hx, -s / hy}},
      {n00 + stride, (1 - s) * t, {-t / hx, (1 - s) / hy}},
      {n00 + stride + 1, s * t, {t / hx, s / hy}},
  };
}

double Grid::domain_measure() const {
  switch (kind_) {
    case GridKind::interval: return bounds_[1] - bounds_[0];
    case GridKind::rectangle: return (bounds_[1] - bounds_[0]) * (bounds_[3] - bounds_[2]);
    case GridKind::radial: return unit_sphere_area(dimension_) * std::pow(bounds_[0], dimension_) / dimension_;
  }
  return 0.0;
}

std::optional<PointStencil> Grid::stencil_at(const Point& p) const {
  if (kind_ == GridKind::rectangle) {
    const auto cx = cells_containing(bounds_[0], bounds_[1], resolution_[0], p[0]);
    const auto cy = cells_containing(bounds_[2], bounds_[3], resolution_[1], p[1]);
    if (cx.empty() || cy.empty()) return std::nullopt;
    PointStencil out;
    const double scale = 1.0 / static_cast<double>(cx.size() * cy.size());
    for (std::size_t iy : cy)
      for (std::size_t ix : cx) accumulate(out, stencil_2d(ix, iy, p[0], p[1]), scale);
    return out;
  }
  const double lo = kind_ == GridKind::radial ? 0.0 : bounds_[0];
  const double hi = kind_ == GridKind::radial ? bounds_[0] : bounds_[1];
  const auto cells = cells_containing(lo, hi, resolution_[0], p[0]);
  if (cells.empty()) return std::nullopt;
  PointStencil out;
  for (std::size_t c : cells) accumulate(out, stencil_1d(c, p[0]), 1.0 / static_cast<double>(cells.size()));
  if (kind_ == GridKind::radial && p[0] <= 1e-12 * (hi / resolution_[0]))
    for (StencilTerm& t : out) t.grad = {0.0, 0.0};
  return out;
}

std::vector<std::size_t> Grid::quadrature_near(const Point& p) const {
  std::vector<std::size_t> cells;
  if (kind_ == GridKind::rectangle) {
    const auto cx = cells_containing(bounds_[0], bounds_[1], resolution_[0], p[0]);
    const auto cy = cells_containing(bounds_[2], bounds_[3], resolution_[1], p[1]);
    for (std::size_t iy : cy)
      for (std::size_t ix : cx) cells.push_back(ix + iy * static_cast<std::size_t>(resolution_[0]));
  } else {
    const double lo = kind_ == GridKind::radial ? 0.0 : bounds_[0];
    const double hi = kind_ == GridKind::radial ? bounds_[0] : bounds_[1];
    cells = cells_containing(lo, hi, resolution_[0], p[0]);
  }
  const std::size_t per_cell = kind_ == GridKind::rectangle ? 4 : 1;
  std::vector<std::size_t> out;
  for (std::size_t c : cells)
    for (std::size_t k = 0; k < per_cell; ++k) out.push_back(c * per_cell + k);
  return out;
}

bool Grid::strictly_inside(const Point& p) const {
  switch (kind_) {
    case GridKind::interval: return p[0] > bounds_[0] && p[0] < bounds_[1];
    case GridKind::radial: return p[0] >= 0.0 && p[0] < bounds_[0];
    case GridKind::rectangle:
      return p[0] > bounds_[0] && p[0] < bounds_[1] && p[1] > bounds_[2] && p[1] < bounds_[3];
  }
  return false;
}

bool Grid::on_boundary_point(const Point& p, double tol) const {
  switch (kind_) {
    case GridKind::interval: return std::abs(p[0] - bounds_[0]) <= tol || std::abs(p[0] - bounds_[1]) <= tol;
    case GridKind::radial: return std::abs(p[0] - bounds_[0]) <= tol;
    case GridKind::rectangle:
      return std::abs(p[0] - bounds_[0]) <= tol || std::abs(p[0] - bounds_[1]) <= tol ||
             std::abs(p[1] - bounds_[2]) <= tol || std::abs(p[1] - bounds_[3]) <= tol;
  }
  return false;
}

std::vector<Grid::LoadSample> Grid::load_quadrature() const {
  std::vector<LoadSample> out;
  if (kind_ == GridKind::rectangle) {
    const std::size_t nx = static_cast<std::size_t>(resolution_[0]), ny = static_cast<std::size_t>(resolution_[1]);
    out.reserve(nx * ny * 9);
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const double x0 = coords_x_[i], x1 = coords_x_[i + 1];
        const double y0 = coords_y_[j], y1 = coords_y_[j + 1];
        for (int b = 0; b < 3; ++b)
          for (int a = 0; a < 3; ++a) {
            const double x = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * kGauss3Nodes[a];
            const double y = 0.5 * (y0 + y1) + 0.5 * (y1 - y0) * kGauss3Nodes[b];
            const double w = 0.25 * (x1 - x0) * (y1 - y0) * kGauss3Weights[a] * kGauss3Weights[b];
            out.push_back({{x, y}, w, stencil_2d(i, j, x, y)});
          }
      }
    return out;
  }
  const double omega = kind_ == GridKind::radial ? unit_sphere_area(dimension_) : 1.0;
  for (std::size_t c = 0; c + 1 < coords_x_.size(); ++c) {
    const double x0 = coords_x_[c], x1 = coords_x_[c + 1];
    for (int a = 0; a < 3; ++a) {
      const double x = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * kGauss3Nodes[a];
      double w = 0.5 * (x1 - x0) * kGauss3Weights[a];
      if (kind_ == GridKind::radial) w *= omega * std::pow(x, dimension_ - 1);
      out.push_back({{x, 0.0}, w, stencil_1d(c, x)});
    }
  }
  return out;
}

std::string Grid::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case GridKind::interval:
      os << "interval " << format_number(bounds_[0]) << ' ' << format_number(bounds_[1]) << ' ' << resolution_[0];
      break;
    case GridKind::rectangle:
      os << "rectangle " << format_number(bounds_[0]) << ' ' << format_number(bounds_[1]) << ' '
         << format_number(bounds_[2]) << ' ' << format_number(bounds_[3]) << ' ' << resolution_[0] << ' '
         << resolution_[1];
      break;
    case GridKind::radial:
      os << "radial " << format_number(bounds_[0]) << ' ' << resolution_[0] << ' ' << dimension_;
      break;
  }
  return os.str();
}

Grid Grid::from_description(const std::string& text) {
  std::istringstream is(text);
  std::string kind;
  is >> kind;
  auto bad = [&] { return Error(ErrorCode::io_error, "malformed grid description \"" + text + "\""); };
  if (kind == "interval") {
    double a, b;
    int n;
    if (!(is >> a >> b >> n)) throw bad();
    return interval(a, b, n);
  }
  if (kind == "rectangle") {
    double ax, bx, ay, by;
    int nx, ny;
    if (!(is >> ax >> bx >> ay >> by >> nx >> ny)) throw bad();
    return rectangle(ax, bx, ay, by, nx, ny);
  }
  if (kind == "radial") {
    double r;
    int n, d;
    if (!(is >> r >> n >> d)) throw bad();
    return radial(r, n, d);
  }
  throw bad();
}

double VectorField::norm_at(std::size_t q) const {
  const auto v = at(q);
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

SourceTerm SourceTerm::constant(const Grid& g, double value) {
  return {{std::vector<double>(g.node_count(), value)}, {}};
}

SourceTerm SourceTerm::from_expression(const Grid& g, const Expression& expr) {
  SourceTerm f{ScalarField::zeros(g), {}};
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const Point& x = g.node(i);
    f.density[i] = expr.evaluate(std::span<const double>(x.data(), 2));
  }
  return f;
}

double SourceTerm::total_mass(const Grid& g) const {
  double total = 0.0;
  for (const auto& s : g.load_quadrature()) {
    double v = 0.0;
    for (const StencilTerm& t : s.stencil) v += t.value * density[t.node];
    total += s.weight * v;
  }
  for (const Atom& a : atoms) total += a.mass;
  return total;
}

double DiscreteMeasure::total_variation(const Grid& g) const {
  double total = boundary_mass;
  for (std::size_t q = 0; q < density.size(); ++q) total += g.quadrature_weight(q) * density[q];
  for (const Atom& a : atoms) total += a.mass;
  return total;
}

DiscreteMeasure DiscreteMeasure::scaled(double lambda) const {
  DiscreteMeasure out = *this;
  for (double& a : out.density) a *= lambda;
  for (Atom& a : out.atoms) a.mass *= lambda;
  out.boundary_mass *= lambda;
  return out;
}

void check_measure(const Grid& g, const DiscreteMeasure& mu) {
  if (mu.density.size() != g.quadrature_count())
    throw Error(ErrorCode::invalid_measure, "density size does not match the grid");
  for (double a : mu.density)
    if (!(a >= 0.0) || !std::isfinite(a)) throw Error(ErrorCode::invalid_measure, "density must be finite and >= 0");
  for (const Atom& a : mu.atoms) {
    if (!(a.mass > 0.0) || !std::isfinite(a.mass)) throw Error(ErrorCode::invalid_measure, "atom masses must be > 0");
    if (!g.stencil_at(a.location)) throw Error(ErrorCode::atom_outside_grid, "measure atom outside the grid");
  }
  if (!(mu.boundary_mass >= 0.0)) throw Error(ErrorCode::invalid_measure, "boundary mass must be >= 0");
}

void check_source(const Grid& g, const SourceTerm& f) {
  if (f.density.size() != g.node_count())
    throw Error(ErrorCode::invalid_measure, "source density size does not match the grid");
  for (const Atom& a : f.atoms)
    if (!g.strictly_inside(a.location)) {
      std::ostringstream os;
      os << "source atom at (" << a.location[0] << ", " << a.location[1] << ") is not strictly inside the domain";
      throw Error(ErrorCode::atom_outside_grid, os.str());
    }
}

VectorField gradient(const Grid& g, const ScalarField& u) {
  VectorField out = VectorField::zeros(g);
  const int d = out.components;
  for (std::size_t q = 0; q < g.quadrature_count(); ++q) {
    auto v = out.at(q);
    for (const StencilTerm& t : g.quadrature_stencil(q))
      for (int k = 0; k < d; ++k) v[k] += t.grad[k] * u[t.node];
  }
  return out;
}

std::array<double, 2> sample_vector(const Grid& g, const VectorField& sigma, const Point& p) {
  const auto qs = g.quadrature_near(p);
  if (qs.empty()) throw Error(ErrorCode::atom_outside_grid, "sample point outside the grid");
  std::array<double, 2> out{0.0, 0.0};
  for (std::size_t q : qs) {
    const auto v = sigma.at(q);
    for (int k = 0; k < sigma.components; ++k) out[k] += v[k];
  }
  for (double& c : out) c /= static_cast<double>(qs.size());
  if (g.kind() == GridKind::radial && p[0] <= 0.0) out = {0.0, 0.0};
  return out;
}

std::vector<double> divergence_weighted(const Grid& g, const DiscreteMeasure& mu, const VectorField& sigma) {
  std::vector<double> out(g.node_count(), 0.0);
  const int d = sigma.components;
  for (std::size_t q = 0; q < g.quadrature_count(); ++q) {
    const double w = g.quadrature_weight(q) * mu.density[q];
    if (w == 0.0) continue;
    const auto s = sigma.at(q);
    for (const StencilTerm& t : g.quadrature_stencil(q)) {
      double dot = 0.0;
      for (int k = 0; k < d; ++k) dot += s[k] * t.grad[k];
      out[t.node] -= w * dot;
    }
  }
  for (const Atom& atom : mu.atoms) {
    const auto st = g.stencil_at(atom.location);
    if (!st) throw Error(ErrorCode::atom_outside_grid, "measure atom outside the grid");
    const auto s = sample_vector(g, sigma, atom.location);
    for (const StencilTerm& t : *st) out[t.node] -= atom.mass * (s[0] * t.grad[0] + s[1] * t.grad[1]);
  }
  return out;
}

std::vector<double> load_vector(const Grid& g, const SourceTerm& f) {
  std::vector<double> b(g.node_count(), 0.0);
  for (const auto& s : g.load_quadrature()) {
    double v = 0.0;
    for (const StencilTerm& t : s.stencil) v += t.value * f.density[t.node];
    if (v == 0.0) continue;
    for (const StencilTerm& t : s.stencil) b[t.node] += s.weight * v * t.value;
  }
  for (const Atom& a : f.atoms) {
    const auto st = g.stencil_at(a.location);
    if (!st) throw Error(ErrorCode::atom_outside_grid, "source atom outside the grid");
    for (const StencilTerm& t : *st) b[t.node] += a.mass * t.value;
  }
  return b;
}

double pair_source(const Grid& g, const SourceTerm& f, const ScalarField& u) {
  const std::vector<double> b = load_vector(g, f);
  double total = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) total += b[i] * u[i];
  return total;
}

double interpolate(const Grid& g, const ScalarField& u, const Point& p) {
  const auto st = g.stencil_at(p);
  if (!st) throw Error(ErrorCode::atom_outside_grid, "interpolation point outside the grid");
  double v = 0.0;
  for (const StencilTerm& t : *st) v += t.value * u[t.node];
  return v;
}

std::array<double, 2> gradient_at(const Grid& g, const ScalarField& u, const Point& p) {
  const auto st = g.stencil_at(p);
  if (!st) throw Error(ErrorCode::atom_outside_grid, "gradient point outside the grid");
  std::array<double, 2> v{0.0, 0.0};
  for (const StencilTerm& t : *st) {
    v[0] += t.grad[0] * u[t.node];
    v[1] += t.grad[1] * u[t.node];
  }
  return v;
}

} // namespace massopt
