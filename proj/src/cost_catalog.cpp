#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "massopt/convex_cost.hpp"
#include "massopt/error.hpp"

namespace massopt {

std::string_view to_string(Regime r) { return r == Regime::superlinear ? "SL" : "L"; }

namespace {

std::string fmt_param(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

[[noreturn]] Interval outside(const std::string& who, double s) {
  throw Error(ErrorCode::outside_domain, who + ": conjugate is +inf at s = " + fmt_param(s));
}

// k t^2 / 2
class QuadraticCost final : public ScalarCost {
public:
  explicit QuadraticCost(double k) : k_(k) {}
  std::string_view family() const override { return "quadratic"; }
  std::string name() const override { return "quadratic(k=" + fmt_param(k_) + ")"; }
  ExtReal value(double t) const override {
    return t < 0.0 ? ExtReal::infinity() : ExtReal(0.5 * k_ * t * t);
  }
  ExtReal conjugate(double s) const override {
    const double sp = std::max(s, 0.0);
    return ExtReal(sp * sp / (2.0 * k_));
  }
  Interval conjugate_subdifferential(double s) const override {
    const double d = std::max(s, 0.0) / k_;
    return {d, d};
  }
  ExtReal recession() const override { return ExtReal::infinity(); }
  bool closed_form() const override { return true; }
  Interval gradient_for_flux(double flux) const override {
    const double g = std::cbrt(2.0 * k_ * flux);
    return {g, g};
  }
  double flux_energy(double flux) const override {
    return 0.75 * std::cbrt(2.0 * k_) * std::pow(std::abs(flux), 4.0 / 3.0);
  }

private:
  double k_;
};

// t^p / p
class PowerCost final : public ScalarCost {
public:
  explicit PowerCost(double p) : p_(p), q_(p / (p - 1.0)) {}
  std::string_view family() const override { return "power"; }
  std::string name() const override { return "power(p=" + fmt_param(p_) + ")"; }
  ExtReal value(double t) const override {
    return t < 0.0 ? ExtReal::infinity() : ExtReal(std::pow(t, p_) / p_);
  }
  ExtReal conjugate(double s) const override { return ExtReal(std::pow(std::max(s, 0.0), q_) / q_); }
  Interval conjugate_subdifferential(double s) const override {
    const double d = std::pow(std::max(s, 0.0), q_ - 1.0);
    return {d, d};
  }
  ExtReal recession() const override { return ExtReal::infinity(); }
  bool closed_form() const override { return true; }
  Interval gradient_for_flux(double flux) const override {
    const double mag = std::pow(std::abs(flux) * std::pow(2.0, q_ - 1.0), 1.0 / (2.0 * q_ - 1.0));
    const double g = std::copysign(mag, flux);
    return {g, g};
  }
  double flux_energy(double flux) const override {
    const double g = gradient_for_flux(flux).lo;
    return std::abs(flux * g) - std::pow(0.5 * g * g, q_) / q_;
  }

private:
  double p_, q_;
};

// k t
class LinearCost final : public ScalarCost {
public:
  explicit LinearCost(double k) : k_(k), bound_(std::sqrt(2.0 * k)) {}
  std::string_view family() const override { return "linear"; }
  std::string name() const override { return "linear(k=" + fmt_param(k_) + ")"; }
  ExtReal value(double t) const override { return t < 0.0 ? ExtReal::infinity() : ExtReal(k_ * t); }
  ExtReal conjugate(double s) const override { return s <= k_ ? ExtReal(0.0) : ExtReal::infinity(); }
  Interval conjugate_subdifferential(double s) const override {
    if (s < k_) return {0.0, 0.0};
    if (s == k_) return {0.0, kInf};
    return outside(name(), s);
  }
  ExtReal recession() const override { return ExtReal(k_); }
  bool closed_form() const override { return true; }
  Interval gradient_for_flux(double flux) const override {
    if (flux > 0.0) return {bound_, bound_};
    if (flux < 0.0) return {-bound_, -bound_};
    return {-bound_, bound_};
  }
  double flux_energy(double flux) const override { return bound_ * std::abs(flux); }
  double slope() const { return k_; }

private:
  double k_, bound_;
};

// t + 1/t on t > 0
class ReciprocalCost final : public ScalarCost {
public:
  std::string_view family() const override { return "reciprocal"; }
  std::string name() const override { return "reciprocal"; }
  ExtReal value(double t) const override {
    return t <= 0.0 ? ExtReal::infinity() : ExtReal(t + 1.0 / t);
  }
  ExtReal conjugate(double s) const override {
    return s <= 1.0 ? ExtReal(-2.0 * std::sqrt(1.0 - s)) : ExtReal::infinity();
  }
  Interval conjugate_subdifferential(double s) const override {
    if (s < 1.0) {
      const double d = 1.0 / std::sqrt(1.0 - s);
      return {d, d};
    }
    if (s == 1.0) return {kInf, kInf};
    return outside(name(), s);
  }
  ExtReal recession() const override { return ExtReal(1.0); }
  bool closed_form() const override { return true; }
  Interval gradient_for_flux(double flux) const override {
    const double g = flux / std::sqrt(1.0 + 0.5 * flux * flux);
    return {g, g};
  }
  double flux_energy(double flux) const override { return 2.0 * std::sqrt(1.0 + 0.5 * flux * flux); }
};

// k t + eps t^2
class AffineQuadraticCost final : public ScalarCost {
public:
  AffineQuadraticCost(double k, double eps) : k_(k), eps_(eps) {}
  std::string_view family() const override { return "affine_quadratic"; }
  std::string name() const override {
    return "affine_quadratic(k=" + fmt_param(k_) + ",eps=" + fmt_param(eps_) + ")";
  }
  ExtReal value(double t) const override {
    return t < 0.0 ? ExtReal::infinity() : ExtReal(k_ * t + eps_ * t * t);
  }
  ExtReal conjugate(double s) const override {
    const double e = std::max(s - k_, 0.0);
    return ExtReal(e * e / (4.0 * eps_));
  }
  Interval conjugate_subdifferential(double s) const override {
    const double d = std::max(s - k_, 0.0) / (2.0 * eps_);
    return {d, d};
  }
  ExtReal recession() const override { return ExtReal::infinity(); }
  bool closed_form() const override { return true; }
  Interval gradient_for_flux(double flux) const override {
    const double g0 = std::sqrt(2.0 * k_);
    if (flux == 0.0) return {-g0, g0};
    // Root of g^3 - 2k g - 4 eps |v| = 0 above sqrt(2k).
    const double target = 4.0 * eps_ * std::abs(flux);
    auto poly = [&](double g) { return g * g * g - 2.0 * k_ * g - target; };
    double lo = g0, hi = g0 + std::cbrt(target) + 1.0;
    while (poly(hi) < 0.0) hi *= 2.0;
    double g = hi;
    for (int it = 0; it < 100; ++it) {
      const double f = poly(g);
      const double df = 3.0 * g * g - 2.0 * k_;
      double next = df > 0.0 ? g - f / df : 0.5 * (lo + hi);
      if (f > 0.0) hi = g; else lo = g;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - g) <= 1e-15 * g) {
        g = next;
        break;
      }
      g = next;
    }
    g = std::copysign(g, flux);
    return {g, g};
  }
  double flux_energy(double flux) const override {
    const Interval gi = gradient_for_flux(flux);
    const double g = gi.hi;
    const double e = std::max(0.5 * g * g - k_, 0.0);
    return std::abs(flux) * std::abs(g) - e * e / (4.0 * eps_);
  }

private:
  double k_, eps_;
};

// User-defined kinds share a cached numeric recession slope.
class NumericCost : public ScalarCost {
public:
  ExtReal recession() const override {
    if (failure_) throw *failure_;
    return recession_;
  }

protected:
  // A failed recession probe is kept and rethrown on use, so that a malformed
  // cost can still be constructed and reported by validation.
  void finalize() {
    try {
      recession_ = numeric_recession(witness());
    } catch (const Error& e) {
      failure_ = e;
    }
  }
  double witness() const override { return witness_; }
  double witness_ = 1.0;

private:
  ExtReal recession_ = ExtReal::infinity();
  std::optional<Error> failure_;
};

class ExpressionCost final : public NumericCost {
public:
  explicit ExpressionCost(const std::string& src) : expr_(Expression::parse(src, {"t"})) {
    for (double t : {1.0, 0.5, 2.0, 0.1, 10.0}) {
      if (value(t).is_finite()) {
        witness_ = t;
        break;
      }
    }
    finalize();
  }
  std::string_view family() const override { return "expression"; }
  std::string name() const override { return "expression(" + expr_.source() + ")"; }
  ExtReal value(double t) const override {
    if (t < 0.0) return ExtReal::infinity();
    const double v = expr_.evaluate(t);
    if (v == -kInf) throw Error(ErrorCode::invalid_cost, name() + " evaluates to -inf");
    return ExtReal(v);
  }

private:
  Expression expr_;
};

class TabulatedCost final : public NumericCost {
public:
  TabulatedCost(std::vector<double> t, std::vector<double> c) : t_(std::move(t)), c_(std::move(c)) {
    if (t_.size() < 2 || t_.size() != c_.size())
      throw Error(ErrorCode::invalid_cost, "tabulated cost needs >= 2 samples with matching lengths");
    for (std::size_t i = 1; i < t_.size(); ++i)
      if (!(t_[i] > t_[i - 1])) throw Error(ErrorCode::invalid_cost, "tabulated cost samples must increase in t");
    if (t_.front() < 0.0) throw Error(ErrorCode::invalid_cost, "tabulated cost must start at t >= 0");
    witness_ = t_[t_.size() / 2];
    finalize();
  }
  std::string_view family() const override { return "tabulated"; }
  std::string name() const override { return "tabulated(" + std::to_string(t_.size()) + " samples)"; }
  ExtReal value(double t) const override {
    if (t < t_.front()) return ExtReal::infinity();
    std::size_t i = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin());
    i = std::clamp<std::size_t>(i, 1, t_.size() - 1);
    const double slope = (c_[i] - c_[i - 1]) / (t_[i] - t_[i - 1]);
    return ExtReal(c_[i - 1] + slope * (t - t_[i - 1]));
  }

private:
  std::vector<double> t_, c_;
};

class PiecewisePolynomialCost final : public NumericCost {
public:
  PiecewisePolynomialCost(std::vector<double> breaks, std::vector<std::vector<double>> coeffs)
      : breaks_(std::move(breaks)), coeffs_(std::move(coeffs)) {
    if (breaks_.empty() || breaks_.size() != coeffs_.size())
      throw Error(ErrorCode::invalid_cost, "piecewise cost needs one coefficient list per breakpoint");
    if (breaks_.front() != 0.0) throw Error(ErrorCode::invalid_cost, "piecewise cost must start at t = 0");
    for (std::size_t i = 1; i < breaks_.size(); ++i)
      if (!(breaks_[i] > breaks_[i - 1])) throw Error(ErrorCode::invalid_cost, "breakpoints must increase");
    finalize();
  }
  std::string_view family() const override { return "piecewise"; }
  std::string name() const override { return "piecewise(" + std::to_string(breaks_.size()) + " pieces)"; }
  ExtReal value(double t) const override {
    if (t < 0.0) return ExtReal::infinity();
    const std::size_t i =
        static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), t) - breaks_.begin()) - 1;
    double acc = 0.0;
    const auto& c = coeffs_[i];
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
    return ExtReal(acc);
  }

private:
  std::vector<double> breaks_;
  std::vector<std::vector<double>> coeffs_;
};

class RegularizedCost final : public NumericCost {
public:
  RegularizedCost(ScalarCostPtr base, double eps) : base_(std::move(base)), eps_(eps) {
    for (double t : {1.0, 0.5, 2.0, 0.1, 10.0}) {
      if (value(t).is_finite()) {
        witness_ = t;
        break;
      }
    }
    finalize();
  }
  std::string_view family() const override { return "regularized"; }
  std::string name() const override { return base_->name() + "+" + fmt_param(eps_) + "t^2"; }
  ExtReal value(double t) const override { return base_->value(t) + ExtReal(t >= 0.0 ? eps_ * t * t : 0.0); }

private:
  ScalarCostPtr base_;
  double eps_;
};

double param(const std::vector<std::pair<std::string, double>>& params, const std::string& key, double fallback) {
  for (const auto& [k, v] : params)
    if (k == key) return v;
  return fallback;
}

void check_params(const std::string& name, const std::vector<std::pair<std::string, double>>& params,
                  std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : params) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw Error(ErrorCode::invalid_cost, "builtin " + name + " has no parameter '" + k + "'");
  }
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw Error(ErrorCode::invalid_cost, std::string(what) + " must be positive and finite");
}

} // namespace

ScalarCostPtr make_quadratic_cost(double k) {
  require_positive(k, "quadratic k");
  return std::make_shared<QuadraticCost>(k);
}
ScalarCostPtr make_power_cost(double p) {
  if (!(p > 1.0)) throw Error(ErrorCode::invalid_cost, "power p must exceed 1");
  return std::make_shared<PowerCost>(p);
}
ScalarCostPtr make_linear_cost(double k) {
  require_positive(k, "linear k");
  return std::make_shared<LinearCost>(k);
}
ScalarCostPtr make_reciprocal_cost() { return std::make_shared<ReciprocalCost>(); }
ScalarCostPtr make_affine_quadratic_cost(double k, double eps) {
  require_positive(k, "affine_quadratic k");
  require_positive(eps, "affine_quadratic eps");
  return std::make_shared<AffineQuadraticCost>(k, eps);
}
ScalarCostPtr make_expression_cost(const std::string& source) {
  return std::make_shared<ExpressionCost>(source);
}
ScalarCostPtr make_tabulated_cost(std::vector<double> t, std::vector<double> c) {
  return std::make_shared<TabulatedCost>(std::move(t), std::move(c));
}
ScalarCostPtr make_piecewise_polynomial_cost(std::vector<double> breaks, std::vector<std::vector<double>> coeffs) {
  return std::make_shared<PiecewisePolynomialCost>(std::move(breaks), std::move(coeffs));
}
ScalarCostPtr make_regularized_cost(ScalarCostPtr base, double eps) {
  require_positive(eps, "regularization eps");
  if (const auto* lin = dynamic_cast<const LinearCost*>(base.get()))
    return make_affine_quadratic_cost(lin->slope(), eps);
  return std::make_shared<RegularizedCost>(std::move(base), eps);
}

ScalarCostPtr make_builtin_cost(const std::string& name, const std::vector<std::pair<std::string, double>>& params) {
  if (name == "quadratic") {
    check_params(name, params, {"k"});
    return make_quadratic_cost(param(params, "k", 1.0));
  }
  if (name == "power") {
    check_params(name, params, {"p"});
    return make_power_cost(param(params, "p", 2.0));
  }
  if (name == "linear") {
    check_params(name, params, {"k"});
    return make_linear_cost(param(params, "k", 0.5));
  }
  if (name == "reciprocal") {
    check_params(name, params, {});
    return make_reciprocal_cost();
  }
  if (name == "affine_quadratic") {
    check_params(name, params, {"k", "eps"});
    return make_affine_quadratic_cost(param(params, "k", 0.5), param(params, "eps", 1e-2));
  }
  throw Error(ErrorCode::invalid_cost, "unknown builtin cost '" + name + "'");
}

GrowthConstants default_growth(const std::string& name, const std::vector<std::pair<std::string, double>>& params) {
  if (name == "quadratic") return {1.0, -0.5 / param(params, "k", 1.0), 1.0};  // k t^2/2 >= t - 1/(2k)
  if (name == "power") {
    const double p = param(params, "p", 2.0);
    return {1.0, -(p - 1.0) / p, 1.0};  // Young: t^p/p >= t - 1/q
  }
  if (name == "linear") return {param(params, "k", 0.5), 0.0, 1.0};
  if (name == "reciprocal") return {1.0, 0.0, 1.0};
  if (name == "affine_quadratic") return {param(params, "k", 0.5), 0.0, 1.0};
  throw Error(ErrorCode::invalid_cost, "unknown builtin cost '" + name + "'");
}

} // namespace massopt
