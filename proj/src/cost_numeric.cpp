// Numeric conjugation and flux-map fallbacks shared by every ScalarCost.

#include <algorithm>
#include <cmath>
#include <limits>

#include "massopt/convex_cost.hpp"
#include "massopt/error.hpp"
#include "massopt/scalar_search.hpp"

namespace massopt {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kDiffStep = 1e-6;
constexpr double kQuotientCap = 1e9;
} // namespace

ExtReal ScalarCost::conjugate(double s) const { return numeric_conjugate(s); }

Interval ScalarCost::conjugate_subdifferential(double s) const {
  return numeric_conjugate_subdifferential(s);
}

ExtReal ScalarCost::recession() const { return numeric_recession(witness()); }

Interval ScalarCost::gradient_for_flux(double flux) const { return numeric_gradient_for_flux(flux); }

double ScalarCost::flux_energy(double flux) const { return numeric_flux_energy(flux); }

ExtReal ScalarCost::numeric_conjugate(double s) const {
  auto gain = [&](double t) {
    const ExtReal c = value(t);
    return c.is_finite() ? t * s - c.value() : kNegInf;
  };
  HalfLineSearch opts;
  opts.start = witness();
  const HalfLineMax r = maximize_concave_half_line(gain, 0.0, opts);
  if (r.diverged) return ExtReal::infinity();
  const double best = std::max(r.best.value, gain(0.0));
  if (best == kNegInf) throw Error(ErrorCode::invalid_cost, name() + " is +inf everywhere");
  if (!r.unbounded_argmax && best > opts.overflow_cap)
    throw Error(ErrorCode::numeric_overflow, "bounded maximizer above the overflow cap");
  return ExtReal(best);
}

Interval ScalarCost::numeric_conjugate_subdifferential(double s) const {
  const ExtReal at = conjugate(s);
  if (at.is_infinite())
    throw Error(ErrorCode::outside_domain, "conjugate of " + name() + " is +inf at s = " + std::to_string(s));
  auto slope = [&](double step) {
    const ExtReal v = conjugate(s + step);
    if (v.is_infinite()) return kInf;
    return (v.value() - at.value()) / step;
  };
  // One Richardson step on each one-sided quotient.
  auto richardson = [&](double step) {
    const double coarse = slope(step);
    const double fine = slope(step / 2.0);
    if (std::isinf(fine)) return kInf;
    if (std::isinf(coarse)) return fine;
    return 2.0 * fine - coarse;
  };
  double hi = richardson(kDiffStep);
  double lo = richardson(-kDiffStep);
  lo = std::max(lo, 0.0);
  hi = std::max(hi, 0.0);
  if (lo > hi) lo = hi = 0.5 * (lo + hi);
  return {lo, hi};
}

ExtReal ScalarCost::numeric_recession(double t0) const {
  const ExtReal base = value(t0);
  if (base.is_infinite()) throw Error(ErrorCode::invalid_cost, name() + ": c(t0) is +inf");
  double prev_q = 0.0, prev_r = 0.0;
  for (int k = 0; k <= 62; ++k) {
    const double s = std::ldexp(1.0, k);
    const ExtReal v = value(t0 + s);
    if (v.is_infinite()) return ExtReal::infinity();
    const double q = (v.value() - base.value()) / s;
    if (k > 0 && q < prev_q - 1e-9 * std::max(1.0, std::abs(prev_q)))
      throw Error(ErrorCode::non_monotone_quotient,
                  name() + ": difference quotients decrease (cost is not convex)");
    if (q > kQuotientCap) return ExtReal::infinity();
    if (k > 0) {
      const double r = std::max(q, 2.0 * q - prev_q);
      if (k > 1 && std::abs(r - prev_r) <= 1e-9 * std::max(1.0, std::abs(r))) return ExtReal(r);
      prev_r = r;
    }
    prev_q = q;
  }
  return ExtReal(prev_r);
}

Interval ScalarCost::numeric_gradient_for_flux(double flux) const {
  const double bound = recession().is_finite() ? std::sqrt(2.0 * recession().value()) : kInf;
  if (flux == 0.0) {
    // g with 0 in dc*(g^2/2), i.e. g^2/2 <= D+c(0).
    const ExtReal c0 = value(0.0);
    if (c0.is_infinite()) return {0.0, 0.0};
    const double q1 = (value(kDiffStep).value() - c0.value()) / kDiffStep;
    const double q2 = (value(kDiffStep / 2.0).value() - c0.value()) / (kDiffStep / 2.0);
    const double slope0 = 2.0 * q2 - q1;
    const double g0 = std::min(bound, std::sqrt(2.0 * std::max(slope0, 0.0)));
    return {-g0, g0};
  }
  const double v2 = flux * flux;
  auto neg_energy = [&](double a) {
    if (a <= 0.0) return kNegInf;
    const ExtReal c = value(a);
    return c.is_finite() ? -(c.value() + v2 / (2.0 * a)) : kNegInf;
  };
  HalfLineSearch opts;
  opts.start = witness();
  const HalfLineMax r = maximize_concave_half_line(neg_energy, 0.0, opts);
  const double a = r.best.argmax;
  if (!(a > 0.0)) throw Error(ErrorCode::invalid_cost, name() + ": flux inversion failed");
  const double g = std::clamp(flux / a, -bound, bound);
  return {g, g};
}

double ScalarCost::numeric_flux_energy(double flux) const {
  const double v2 = flux * flux;
  auto neg_energy = [&](double a) {
    if (a < 0.0 || (a == 0.0 && v2 > 0.0)) return kNegInf;
    const ExtReal c = value(a);
    if (c.is_infinite()) return kNegInf;
    return a == 0.0 ? -c.value() : -(c.value() + v2 / (2.0 * a));
  };
  HalfLineSearch opts;
  opts.start = witness();
  const HalfLineMax r = maximize_concave_half_line(neg_energy, 0.0, opts);
  return -std::max(r.best.value, neg_energy(0.0));
}

} // namespace massopt
