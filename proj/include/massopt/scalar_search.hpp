#pragma once

#include <cmath>
#include <functional>
#include <limits>

namespace massopt {

struct ScalarMax {
  double argmax = 0.0;
  double value = -std::numeric_limits<double>::infinity();
};

/// Golden-section search for the maximum of a unimodal (concave) function on
/// [lo, hi]. Function values of -inf are allowed. Stops when the bracket is
/// narrower than abs_tol + rel_tol * |x|.
ScalarMax golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                             double abs_tol = 1e-10, double rel_tol = 1e-14);

/// Options for maximizing a concave function over [lo, +inf).
struct HalfLineSearch {
  double start = 1.0;        // first probe (> lo)
  double argument_cap = 1e18;
  double overflow_cap = 1e10;
  double abs_tol = 1e-10;
};

struct HalfLineMax {
  ScalarMax best;
  bool diverged = false;  // supremum is +inf
  bool unbounded_argmax = false;
};

/// Supremum of a concave function on [lo, +inf) by exponential bracketing
/// followed by golden section. Reports divergence when the values exceed the
/// overflow cap while the maximizer runs off to infinity.
HalfLineMax maximize_concave_half_line(const std::function<double(double)>& f, double lo,
                                       const HalfLineSearch& opts = {});

/// Same as above on (-inf, hi].
HalfLineMax maximize_concave_left_half_line(const std::function<double(double)>& f, double hi,
                                            const HalfLineSearch& opts = {});

/// Smallest x in [lo, hi] with pred(x) true, for a predicate that is false
/// then true along the interval. Returns hi when pred(lo) is already false at
/// hi, lo when pred(lo) holds.
double bisect_threshold(const std::function<bool(double)>& pred, double lo, double hi,
                        int max_iterations = 200);

} // namespace massopt
