#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "massopt/convex_cost.hpp"

namespace massopt {

enum class GridKind { interval, rectangle, radial };

/// One term of the nodal-hat expansion at a point: the hat of `node`, its
/// value there and its gradient (second component unused on 1D grids).
struct StencilTerm {
  std::size_t node;
  double value;
  std::array<double, 2> grad;
};
using PointStencil = std::vector<StencilTerm>;

/// Structured grid with nodal hat (piecewise multilinear) test functions.
///
/// Vector quantities (gradients, fluxes) live on quadrature points: one
/// midpoint per cell on interval and radial grids, a 2x2 Gauss rule per cell
/// on rectangles. Radial grids discretize an n-ball with radially symmetric
/// data; their cells carry the measure |S^{n-1}| r^{n-1} dr and their only
/// gradient component is the radial derivative.
class Grid {
public:
  static Grid interval(double a, double b, int cells);
  static Grid rectangle(double ax, double bx, double ay, double by, int nx, int ny);
  static Grid radial(double radius, int cells, int dimension);

  GridKind kind() const { return kind_; }
  /// Dimension n of the physical domain.
  int dimension() const { return dimension_; }
  /// Number of gradient components stored per quadrature point (1 or 2).
  int components() const { return kind_ == GridKind::rectangle ? 2 : 1; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t cell_count() const { return cell_volumes_.size(); }
  std::size_t quadrature_count() const { return quad_points_.size(); }

  const Point& node(std::size_t i) const { return nodes_[i]; }
  bool on_boundary(std::size_t i) const { return boundary_[i] != 0; }
  std::span<const double> cell_volumes() const { return cell_volumes_; }
  double domain_measure() const;

  const Point& quadrature_point(std::size_t q) const { return quad_points_[q]; }
  double quadrature_weight(std::size_t q) const { return quad_weights_[q]; }
  std::size_t cell_of(std::size_t q) const { return quad_cell_[q]; }
  const PointStencil& quadrature_stencil(std::size_t q) const { return quad_stencils_[q]; }

  /// Hat values and gradients at an arbitrary point of the closed domain;
  /// std::nullopt outside. On a node of a 1D grid the gradient is the mean of
  /// the two adjacent cell gradients; at the centre of a radial grid it is 0.
  std::optional<PointStencil> stencil_at(const Point& p) const;
  /// Quadrature points of the cell(s) containing p, used to sample vector
  /// fields at atoms.
  std::vector<std::size_t> quadrature_near(const Point& p) const;
  bool strictly_inside(const Point& p) const;
  bool on_boundary_point(const Point& p, double tol = 1e-12) const;

  /// High-order quadrature for loads: (point, weight, cell) triples.
  struct LoadSample {
    Point x;
    double weight;
    PointStencil stencil;
  };
  std::vector<LoadSample> load_quadrature() const;

  /// "interval a b N", "rectangle ax bx ay by nx ny", "radial R N n".
  std::string describe() const;
  static Grid from_description(const std::string& text);

  /// Parameters as stored by describe(); for radial grids {R}.
  const std::vector<double>& bounds() const { return bounds_; }
  const std::vector<int>& resolution() const { return resolution_; }

private:
  GridKind kind_ = GridKind::interval;
  int dimension_ = 1;
  std::vector<double> bounds_;
  std::vector<int> resolution_;
  std::vector<Point> nodes_;
  std::vector<char> boundary_;
  std::vector<double> cell_volumes_;
  std::vector<Point> quad_points_;
  std::vector<double> quad_weights_;
  std::vector<std::size_t> quad_cell_;
  std::vector<PointStencil> quad_stencils_;
  std::vector<double> coords_x_, coords_y_;

  void finish_1d();
  PointStencil stencil_1d(std::size_t cell, double x) const;
  PointStencil stencil_2d(std::size_t ix, std::size_t iy, double x, double y) const;
};

/// |S^{n-1}|, the surface measure of the unit sphere in R^n (2 for n = 1).
double unit_sphere_area(int n);

/// Nodal scalar field.
struct ScalarField {
  std::vector<double> values;

  static ScalarField zeros(const Grid& g) { return {std::vector<double>(g.node_count(), 0.0)}; }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

/// Vector field sampled at quadrature points, `components` values each.
struct VectorField {
  int components = 1;
  std::vector<double> values;

  static VectorField zeros(const Grid& g) {
    return {g.components(), std::vector<double>(g.quadrature_count() * g.components(), 0.0)};
  }
  std::span<double> at(std::size_t q) { return {values.data() + q * components, static_cast<std::size_t>(components)}; }
  std::span<const double> at(std::size_t q) const {
    return {values.data() + q * components, static_cast<std::size_t>(components)};
  }
  double norm_at(std::size_t q) const;
  std::size_t size() const { return values.size() / static_cast<std::size_t>(components); }
};

struct Atom {
  Point location;
  double mass;
};

/// Signed source f = density (nodal, interpolated by hats) + Dirac atoms.
struct SourceTerm {
  ScalarField density;
  std::vector<Atom> atoms;

  static SourceTerm constant(const Grid& g, double value);
  static SourceTerm from_expression(const Grid& g, const Expression& expr);  // variables x, y
  double total_mass(const Grid& g) const;
};

/// Candidate conductivity mu = a dx + sum of atoms. The density lives on
/// quadrature points.
struct DiscreteMeasure {
  std::vector<double> density;
  std::vector<Atom> atoms;
  double boundary_mass = 0.0;

  static DiscreteMeasure lebesgue(const Grid& g, double a = 1.0) {
    return {std::vector<double>(g.quadrature_count(), a), {}, 0.0};
  }
  double total_variation(const Grid& g) const;
  DiscreteMeasure scaled(double lambda) const;
};

/// Throws Error(invalid_measure) for negative densities or nonpositive atoms.
void check_measure(const Grid& g, const DiscreteMeasure& mu);
/// Throws Error(atom_outside_grid) unless every atom lies strictly inside.
void check_source(const Grid& g, const SourceTerm& f);

// Module operations.
VectorField gradient(const Grid& g, const ScalarField& u);
/// <div(mu sigma), phi_j> = -int sigma . grad(phi_j) dmu for every node j.
std::vector<double> divergence_weighted(const Grid& g, const DiscreteMeasure& mu, const VectorField& sigma);
/// Discrete load b_j = <f, phi_j>.
std::vector<double> load_vector(const Grid& g, const SourceTerm& f);
double pair_source(const Grid& g, const SourceTerm& f, const ScalarField& u);
/// Sample a nodal field at an arbitrary point (multilinear interpolation).
double interpolate(const Grid& g, const ScalarField& u, const Point& p);
/// Gradient of the interpolant at p, using the stencil_at conventions.
std::array<double, 2> gradient_at(const Grid& g, const ScalarField& u, const Point& p);
/// Vector field sampled at p: mean over the quadrature points of the
/// containing cell(s).
std::array<double, 2> sample_vector(const Grid& g, const VectorField& sigma, const Point& p);

} // namespace massopt
