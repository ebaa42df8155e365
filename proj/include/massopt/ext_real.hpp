#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <limits>
#include <stdexcept>

namespace massopt {

/// A real number or +infinity. Convex costs and their conjugates take values
/// in (-inf, +inf]; NaN and -inf are rejected at construction.
class ExtReal {
public:
  constexpr ExtReal() = default;
  ExtReal(double v) : v_(v) {
    if (std::isnan(v) || v == -std::numeric_limits<double>::infinity())
      throw std::domain_error("ExtReal: value must be a real number or +inf");
  }

  static ExtReal infinity() { return ExtReal(std::numeric_limits<double>::infinity()); }

  bool is_finite() const { return std::isfinite(v_); }
  bool is_infinite() const { return !is_finite(); }
  double value() const { return v_; }
  explicit operator double() const { return v_; }

  friend ExtReal operator+(ExtReal a, ExtReal b) {
    if (a.is_infinite() || b.is_infinite()) return infinity();
    return ExtReal(a.v_ + b.v_);
  }
  friend ExtReal operator-(ExtReal a, double b) {
    if (a.is_infinite()) return infinity();
    return ExtReal(a.v_ - b);
  }
  // Nonnegative scaling with the convex-analysis convention 0 * inf = 0.
  friend ExtReal operator*(double k, ExtReal a) {
    if (k < 0.0) throw std::domain_error("ExtReal: negative scaling");
    if (k == 0.0) return ExtReal(0.0);
    if (a.is_infinite()) return infinity();
    return ExtReal(k * a.v_);
  }
  ExtReal& operator+=(ExtReal o) { return *this = *this + o; }

  friend bool operator==(ExtReal a, ExtReal b) { return a.v_ == b.v_; }
  friend auto operator<=>(ExtReal a, ExtReal b) { return a.v_ <=> b.v_; }

private:
  double v_ = 0.0;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval [lo, hi] of extended reals; hi may be +inf. An empty set is
/// encoded as lo > hi.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool empty() const { return lo > hi; }
  bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
  bool degenerate() const { return lo == hi; }
  double distance(double v) const {
    if (empty()) return kInf;
    if (v < lo) return lo - v;
    if (v > hi) return v - hi;
    return 0.0;
  }
  double clamp(double v) const { return std::clamp(v, lo, hi); }
};

} // namespace massopt
