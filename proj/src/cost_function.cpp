#include <algorithm>
#include <cmath>
#include <sstream>

#include "massopt/convex_cost.hpp"
#include "massopt/error.hpp"
#include "massopt/scalar_search.hpp"

namespace massopt {

double LocalCost::lipschitz_bound() const {
  const ExtReal r = recession();
  return r.is_finite() ? std::sqrt(2.0 * r.value()) : kInf;
}

namespace {
// s = g^2/2, snapped onto the finiteness threshold when |g| sits within the
// slack above the Lipschitz bound.
struct SnappedLevel {
  double s;
  bool saturated;
  bool infeasible;
};

SnappedLevel snap(const LocalCost& c, double g) {
  const double bound = c.lipschitz_bound();
  const double mag = std::abs(g);
  if (std::isfinite(bound) && mag >= bound) {
    if (mag > bound + kLipschitzSlack) return {0.5 * g * g, false, true};
    return {c.finiteness_threshold(), true, false};
  }
  return {0.5 * g * g, false, false};
}
} // namespace

ExtReal LocalCost::phi(double g) const {
  const SnappedLevel lv = snap(*this, g);
  if (lv.infeasible) return ExtReal::infinity();
  if (lv.saturated) return w_ * base_->conjugate(base_->finiteness_threshold());
  return conjugate(lv.s);
}

Interval LocalCost::flux_of_gradient(double g) const {
  const SnappedLevel lv = snap(*this, g);
  if (lv.infeasible) return {kInf, -kInf};
  const Interval d = lv.saturated ? base_->conjugate_subdifferential(base_->finiteness_threshold())
                                  : subdifferential(lv.s);
  if (g == 0.0) return {0.0, 0.0};
  const double mag = std::abs(g);
  if (g > 0.0) return {mag * d.lo, mag * d.hi};
  return {-mag * d.hi, -mag * d.lo};
}

Interval LocalCost::gradient_for_flux(double flux) const {
  const double r = std::sqrt(w_);
  const Interval g = base_->gradient_for_flux(flux / r);
  return {r * g.lo, r * g.hi};
}

double LocalCost::flux_energy(double flux) const { return w_ * base_->flux_energy(flux / std::sqrt(w_)); }

double LocalCost::radial_prox(double target, double lambda) const {
  if (target <= 0.0) return 0.0;
  const double top = std::min(target, lipschitz_bound());
  // Monotone flux: if top does not overshoot, no smaller g reaches the target.
  if (top + lambda * flux_of_gradient(top).lo <= target) return top;
  auto reached = [&](double g) { return g + lambda * flux_of_gradient(g).hi >= target; };
  return bisect_threshold(reached, 0.0, top, 200);
}

double CostFunction::weight_at(const Point& x, std::optional<std::size_t> quadrature_index) const {
  if (const auto* e = std::get_if<WeightExpression>(&weight_)) {
    const double w = e->expression.evaluate(std::span<const double>(x.data(), 2));
    if (!(w > 0.0) || !std::isfinite(w))
      throw Error(ErrorCode::invalid_cost, "spatial weight must be positive and finite");
    return w;
  }
  if (const auto* t = std::get_if<WeightTable>(&weight_)) {
    if (!quadrature_index || *quadrature_index >= t->values.size())
      throw Error(ErrorCode::invalid_cost, "tabulated weight needs a valid quadrature index");
    return t->values[*quadrature_index];
  }
  return 1.0;
}

ExtReal conjugate_eval(const CostFunction& cost, const Point& x, double s) {
  if (!std::isfinite(s)) throw Error(ErrorCode::outside_domain, "conjugate argument must be finite");
  return cost.at(x).conjugate(s);
}

RecessionValue recession_eval(const CostFunction& cost, const Point& x) {
  const ExtReal r = cost.at(x).recession();
  return {r, r.is_finite() ? Regime::linear : Regime::superlinear};
}

Interval subdiff_interval(const CostFunction& cost, const Point& x, double s) {
  const LocalCost local = cost.at(x);
  if (s > local.finiteness_threshold()) {
    std::ostringstream os;
    os << "s = " << s << " exceeds the finiteness threshold " << local.finiteness_threshold();
    throw Error(ErrorCode::outside_domain, os.str());
  }
  return local.subdifferential(s);
}

ValidationReport validate_cost(const CostFunction& cost, std::span<const Point> points, int sample_budget) {
  ValidationReport report;
  auto fail = [&](std::string check, const Point& x, double t, std::string detail) {
    report.passed = false;
    report.failures.push_back({std::move(check), x, t, std::move(detail)});
  };

  std::vector<double> ts{0.0};
  const int n = std::max(sample_budget - 1, 3);
  for (int i = 0; i < n; ++i) ts.push_back(std::pow(10.0, -3.0 + 6.0 * i / (n - 1)));

  const std::vector<Point> fallback{Point{0.0, 0.0}};
  if (points.empty()) points = fallback;

  // Each (point, weight index) pair to check.
  std::vector<std::pair<Point, std::optional<std::size_t>>> sites;
  if (const auto* table = std::get_if<WeightTable>(&cost.spatial_weight())) {
    for (std::size_t i = 0; i < table->values.size(); ++i) sites.push_back({Point{}, i});
  } else {
    for (const Point& p : points) sites.push_back({p, std::nullopt});
  }

  const GrowthConstants& g = cost.growth();
  if (!(g.alpha > 0.0)) fail("growth", Point{}, 0.0, "alpha must be positive");
  if (!(g.t0 > 0.0)) fail("finiteness", Point{}, g.t0, "t0 must be positive");

  for (const auto& [x, index] : sites) {
    LocalCost local;
    try {
      const double w = cost.weight_at(x, index);
      if (!(w > 0.0) || !std::isfinite(w)) {
        fail("weight", x, 0.0, "weight must be positive and finite");
        continue;
      }
      local = cost.at(x, index);
    } catch (const Error& e) {
      fail("weight", x, 0.0, e.what());
      continue;
    }
    try {
      for (double t : {-1.0, -1e-3})
        if (local.value(t).is_finite()) fail("negative_domain", x, t, "c(x,t) must be +inf for t < 0");
      if (local.value(g.t0).is_infinite()) fail("finiteness", x, g.t0, "c(x,t0) is +inf");

      std::vector<double> cs;
      cs.reserve(ts.size());
      for (double t : ts) {
        const ExtReal c = local.value(t);
        cs.push_back(c.value());
        const double bound = g.alpha * t + g.beta;
        if (c.is_finite() && c.value() < bound - 1e-12 * (1.0 + std::abs(bound))) {
          std::ostringstream os;
          os << "c = " << c.value() << " < alpha t + beta = " << bound;
          fail("growth", x, t, os.str());
        }
      }
      for (std::size_t i = 1; i + 1 < ts.size(); ++i) {
        if (!std::isfinite(cs[i - 1]) || !std::isfinite(cs[i]) || !std::isfinite(cs[i + 1])) continue;
        const double lam = (ts[i] - ts[i - 1]) / (ts[i + 1] - ts[i - 1]);
        const double chord = (1.0 - lam) * cs[i - 1] + lam * cs[i + 1];
        const double scale = 1.0 + std::abs(cs[i - 1]) + std::abs(cs[i + 1]);
        if (cs[i] > chord + 1e-10 * scale) {
          std::ostringstream os;
          os << "secant test fails: c = " << cs[i] << " above chord " << chord;
          fail("convexity", x, ts[i], os.str());
        }
      }
    } catch (const Error& e) {
      fail("evaluation", x, 0.0, e.what());
    }
  }

  try {
    report.recession = cost.base().recession();
    report.regime = report.recession.is_finite() ? Regime::linear : Regime::superlinear;
  } catch (const Error& e) {
    fail("convexity", Point{}, 0.0, e.what());
  }

  if (cost.homogeneous()) {
    report.p3_status = "homogeneous";
  } else if (std::holds_alternative<WeightTable>(cost.spatial_weight())) {
    report.p3_status = "assumed";
  } else {
    report.p3_status = "verified";
    constexpr double kProbe = 1e-6;
    for (const Point& x : points) {
      try {
        const double w = cost.weight_at(x);
        for (int axis = 0; axis < 2; ++axis) {
          Point y = x;
          y[axis] += kProbe;
          const double wy = cost.weight_at(y);
          if (std::abs(wy - w) > 1e-3 * (1.0 + std::abs(w))) {
            report.p3_status = "failed";
            fail("continuity", x, 0.0, "spatial weight jumps between nearby samples");
          }
        }
      } catch (const Error& e) {
        report.p3_status = "failed";
        fail("continuity", x, 0.0, e.what());
      }
    }
  }
  return report;
}

} // namespace massopt
