#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "massopt/expression.hpp"
#include "massopt/ext_real.hpp"

namespace massopt {

using Point = std::array<double, 2>;

enum class Regime { superlinear, linear };

std::string_view to_string(Regime r);

/// A homogeneous convex cost c(t) on [0, +inf) (or (0, +inf)), equal to +inf
/// for t < 0. Implementations are immutable and thread-safe.
///
/// Besides c and c*, every cost exposes the scalar machinery used by the
/// auxiliary problem, phi(g) = c*(g^2/2):
///   - flux_of_gradient(g)  = g * dc*(g^2/2), the (set-valued) flux map m(g);
///   - gradient_for_flux(v) = m^{-1}(v), its inverse;
///   - flux_energy(v)       = phi*(v) = inf_{a>0} c(a) + v^2/(2a).
/// The defaults are numeric; catalog costs override them with closed forms.
class ScalarCost {
public:
  virtual ~ScalarCost() = default;

  virtual std::string name() const = 0;
  /// Catalog kind: "quadratic", "power", "linear", "reciprocal",
  /// "affine_quadratic", "expression", "tabulated", "piecewise", "regularized".
  virtual std::string_view family() const = 0;
  virtual ExtReal value(double t) const = 0;

  /// c*(s) = sup_{t>=0} (t s - c(t)).
  virtual ExtReal conjugate(double s) const;
  /// [D-c*(s), D+c*(s)]. Throws Error(outside_domain) when c*(s) = +inf.
  virtual Interval conjugate_subdifferential(double s) const;
  /// c_inf(1), the recession slope; +inf in the superlinear regime.
  virtual ExtReal recession() const;
  virtual bool closed_form() const { return false; }

  virtual Interval gradient_for_flux(double flux) const;
  virtual double flux_energy(double flux) const;

  /// Supremum of {s : c*(s) < +inf}. Equals recession().
  double finiteness_threshold() const { return recession().value(); }
  Regime regime() const { return recession().is_finite() ? Regime::linear : Regime::superlinear; }

  // Numeric fallbacks, exposed so that closed forms can be cross-checked.
  ExtReal numeric_conjugate(double s) const;
  Interval numeric_conjugate_subdifferential(double s) const;
  ExtReal numeric_recession(double t0 = 1.0) const;
  Interval numeric_gradient_for_flux(double flux) const;
  double numeric_flux_energy(double flux) const;

protected:
  /// A point where c is finite; used to seed searches.
  virtual double witness() const { return 1.0; }
};

using ScalarCostPtr = std::shared_ptr<const ScalarCost>;

/// Growth constants of the standing hypotheses: c(t) >= alpha t + beta and
/// c(t0) < +inf.
struct GrowthConstants {
  double alpha = 1.0;
  double beta = 0.0;
  double t0 = 1.0;
};

// Catalog. Each returns a closed-form implementation.
ScalarCostPtr make_quadratic_cost(double k = 1.0);             // k t^2 / 2
ScalarCostPtr make_power_cost(double p);                       // t^p / p, p > 1
ScalarCostPtr make_linear_cost(double k = 0.5);                // k t
ScalarCostPtr make_reciprocal_cost();                          // t + 1/t on t > 0
ScalarCostPtr make_affine_quadratic_cost(double k, double eps); // k t + eps t^2

// User-defined kinds; conjugates are computed numerically.
ScalarCostPtr make_expression_cost(const std::string& source);
ScalarCostPtr make_tabulated_cost(std::vector<double> t, std::vector<double> c);
/// Polynomial pieces in absolute t: piece i has coefficients coeffs[i] (lowest
/// degree first) on [breaks[i], breaks[i+1]); the last piece extends to +inf.
ScalarCostPtr make_piecewise_polynomial_cost(std::vector<double> breaks,
                                             std::vector<std::vector<double>> coeffs);
/// c(t) + eps t^2, numeric unless `base` is linear.
ScalarCostPtr make_regularized_cost(ScalarCostPtr base, double eps);

/// Builtin lookup by name ("quadratic", "power", "linear", "reciprocal",
/// "affine_quadratic") with named parameters.
ScalarCostPtr make_builtin_cost(const std::string& name,
                                const std::vector<std::pair<std::string, double>>& params);
GrowthConstants default_growth(const std::string& builtin_name,
                               const std::vector<std::pair<std::string, double>>& params);

/// The cost frozen at one point x: c(x, t) = w * c0(t) with w > 0.
class LocalCost {
public:
  LocalCost() = default;
  LocalCost(const ScalarCost* base, double weight) : base_(base), w_(weight) {}

  ExtReal value(double t) const { return w_ * base_->value(t); }
  ExtReal conjugate(double s) const { return w_ * base_->conjugate(s / w_); }
  Interval subdifferential(double s) const { return base_->conjugate_subdifferential(s / w_); }
  ExtReal recession() const { return w_ * base_->recession(); }
  double finiteness_threshold() const { return w_ * base_->finiteness_threshold(); }
  /// sqrt(2 c_inf(x,1)); +inf in the superlinear regime.
  double lipschitz_bound() const;

  /// phi(g) = c*(g^2/2), with gradients up to kLipschitzSlack beyond the
  /// Lipschitz bound treated as saturated.
  ExtReal phi(double g) const;
  Interval flux_of_gradient(double g) const;
  Interval gradient_for_flux(double flux) const;
  double flux_energy(double flux) const;
  /// argmin_{g>=0} lambda phi(g) + (g - target)^2 / 2, for target >= 0.
  double radial_prox(double target, double lambda) const;

  const ScalarCost& base() const { return *base_; }
  double weight() const { return w_; }

private:
  const ScalarCost* base_ = nullptr;
  double w_ = 1.0;
};

inline constexpr double kLipschitzSlack = 1e-9;

/// Spatial weight w(x) of a separable heterogeneous cost c(x,t) = w(x) c0(t).
struct WeightExpression {
  Expression expression;  // variables x, y
};
struct WeightTable {
  std::vector<double> values;  // one per quadrature point of the target grid
};
using SpatialWeight = std::variant<std::monostate, WeightExpression, WeightTable>;

/// A convex cost c(x,t): homogeneous base, optional spatial weight, and the
/// growth constants that validation checks against.
class CostFunction {
public:
  CostFunction() = default;
  CostFunction(ScalarCostPtr base, GrowthConstants growth, SpatialWeight weight = {})
      : base_(std::move(base)), growth_(growth), weight_(std::move(weight)) {}

  const ScalarCost& base() const { return *base_; }
  const ScalarCostPtr& base_ptr() const { return base_; }
  const GrowthConstants& growth() const { return growth_; }
  const SpatialWeight& spatial_weight() const { return weight_; }
  bool homogeneous() const { return std::holds_alternative<std::monostate>(weight_); }

  /// Weight at x; `quadrature_index` selects the entry of a tabulated weight.
  double weight_at(const Point& x, std::optional<std::size_t> quadrature_index = {}) const;
  LocalCost at(const Point& x, std::optional<std::size_t> quadrature_index = {}) const {
    return LocalCost(base_.get(), weight_at(x, quadrature_index));
  }
  Regime regime() const { return base_->regime(); }

private:
  ScalarCostPtr base_;
  GrowthConstants growth_;
  SpatialWeight weight_;
};

struct RecessionValue {
  ExtReal c_inf_1;
  Regime regime = Regime::superlinear;
};

// Module operations.
ExtReal conjugate_eval(const CostFunction& cost, const Point& x, double s);
RecessionValue recession_eval(const CostFunction& cost, const Point& x);
Interval subdiff_interval(const CostFunction& cost, const Point& x, double s);

struct ValidationFailure {
  std::string check;  // "growth", "negative_domain", "convexity", "finiteness", "weight", "continuity"
  Point x{};
  double t = 0.0;
  std::string detail;
};

struct ValidationReport {
  bool passed = true;
  std::vector<ValidationFailure> failures;
  Regime regime = Regime::superlinear;
  ExtReal recession;
  std::string p3_status;  // "homogeneous", "verified", "assumed", "failed"
};

/// Samples t on a log grid of `sample_budget` points and x on `points`; never
/// throws for a malformed cost, reporting every failure instead.
ValidationReport validate_cost(const CostFunction& cost, std::span<const Point> points,
                               int sample_budget = 256);

} // namespace massopt
