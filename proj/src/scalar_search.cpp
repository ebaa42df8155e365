#include "massopt/scalar_search.hpp"

#include <algorithm>
#include <limits>
#include <cmath>

namespace massopt {

namespace {
constexpr double kInvPhi = 0.6180339887498949;  // (sqrt(5) - 1) / 2

void keep_better(ScalarMax& best, double x, double fx) {
  if (fx > best.value) {
    best.argmax = x;
    best.value = fx;
  }
}
} // namespace

ScalarMax golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                             double abs_tol, double rel_tol) {
  ScalarMax best;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 400; ++it) {
    const double scale = std::max(std::abs(a), std::abs(b));
    if (b - a <= abs_tol + rel_tol * scale) break;
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  keep_better(best, c, fc);
  keep_better(best, d, fd);
  const double mid = 0.5 * (a + b);
  keep_better(best, mid, f(mid));
  keep_better(best, lo, f(lo));
  keep_better(best, hi, f(hi));
  return best;
}

HalfLineMax maximize_concave_half_line(const std::function<double(double)>& f, double lo,
                                       const HalfLineSearch& opts) {
  HalfLineMax out;
  double step = std::max(opts.start, 1e-300);
  double prev = lo;
  double cur = lo + step;
  double fcur = f(cur);
  double bracket_lo = lo;
  while (true) {
    if (fcur > opts.overflow_cap) {
      out.diverged = true;
      out.unbounded_argmax = true;
      out.best = {cur, std::numeric_limits<double>::infinity()};
      return out;
    }
    const double next = lo + 2.0 * (cur - lo);
    if (next - lo > opts.argument_cap) {
      // Still nondecreasing at the cap: the supremum is a finite limit.
      out.unbounded_argmax = true;
      out.best = {cur, fcur};
      return out;
    }
    const double fnext = f(next);
    if (!(fnext > fcur)) {
      bracket_lo = prev;
      out.best = golden_section_max(f, bracket_lo, next, opts.abs_tol, 1e-15);
      return out;
    }
    prev = cur;
    cur = next;
    fcur = fnext;
  }
}

HalfLineMax maximize_concave_left_half_line(const std::function<double(double)>& f, double hi,
                                            const HalfLineSearch& opts) {
  auto mirrored = [&](double x) { return f(-x); };
  HalfLineMax out = maximize_concave_half_line(mirrored, -hi, opts);
  out.best.argmax = -out.best.argmax;
  return out;
}

double bisect_threshold(const std::function<bool(double)>& pred, double lo, double hi,
                        int max_iterations) {
  if (pred(lo)) return lo;
  for (int it = 0; it < max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (pred(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

} // namespace massopt
