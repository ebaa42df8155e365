// Exact dual solver for interval and radial grids.
//
// In 1D the divergence constraint fixes the integrated flux F_i = w_i s_i / h_i
// up to one constant: F_{j-1} - F_j = b_j at every interior node. On a radial
// grid the centre node removes that freedom (F_0 = -b_0). On an interval the
// constant theta is chosen so that the optimal gradients g_i in
// m^{-1}(s_i) integrate to zero across the domain, which is the first-order
// condition of the one-dimensional concave dual in theta.

#include <algorithm>
#include <cmath>

#include "massopt/scalar_search.hpp"
#include "solver_internal.hpp"

namespace massopt::detail {

namespace {

struct Line {
  const AuxiliaryProblem& p;
  std::vector<double> h, w;
  double zeta = 0.0;  // hull half-width for set-valued flux maps

  explicit Line(const AuxiliaryProblem& problem) : p(problem) {
    const std::size_t n = p.grid.cell_count();
    for (std::size_t i = 0; i < n; ++i) {
      h.push_back(p.grid.node(i + 1)[0] - p.grid.node(i)[0]);
      w.push_back(p.grid.quadrature_weight(i));
    }
  }

  double flux(std::size_t i, double integrated) const { return integrated * h[i] / w[i]; }

  // Gradients compatible with flux s, widened by zeta so that fluxes that are
  // zero up to rounding see the whole subdifferential.
  Interval gradients(std::size_t i, double s) const {
    if (zeta == 0.0) return p.local[i].gradient_for_flux(s);
    return {p.local[i].gradient_for_flux(s - zeta).lo, p.local[i].gradient_for_flux(s + zeta).hi};
  }
};

void set_zeta(Line& line, const std::vector<double>& fluxes) {
  double m = 1.0;
  for (double s : fluxes) m = std::max(m, std::abs(s));
  line.zeta = std::max(line.zeta, 1e-13 * m);
}

} // namespace

AuxiliarySolution solve_flux_line(const AuxiliaryProblem& p, const SolverParams& params) {
  Line line(p);
  const std::size_t n = p.grid.cell_count();
  AuxiliarySolution sol;
  sol.method = SolverMethod::flux_line;
  sol.u_bar = ScalarField::zeros(p.grid);
  sol.flux = VectorField::zeros(p.grid);
  std::vector<double> g(n, 0.0);
  int evaluations = 0;

  if (p.grid.kind() == GridKind::radial) {
    double F = 0.0;
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      F -= p.load[i];
      s[i] = line.flux(i, F);
    }
    set_zeta(line, s);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = line.gradients(i, s[i]).clamp(0.0);
      sol.flux.values[i] = s[i];
    }
    for (std::size_t i = n; i-- > 0;) sol.u_bar[i] = sol.u_bar[i + 1] - line.h[i] * g[i];
    evaluations = 1;
  } else {
    std::vector<double> prefix(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) prefix[i] = prefix[i - 1] + p.load[i];
    const auto [cmin, cmax] = std::minmax_element(prefix.begin(), prefix.end());
    const double margin = 1.0 + (*cmax - *cmin);
    const double theta_lo = *cmin - margin, theta_hi = *cmax + margin;

    std::vector<double> s(n);
    auto fluxes_at = [&](double theta) {
      for (std::size_t i = 0; i < n; ++i) s[i] = line.flux(i, theta - prefix[i]);
    };
    fluxes_at(theta_hi);
    set_zeta(line, s);
    fluxes_at(theta_lo);
    set_zeta(line, s);

    // Sum of h_i g_i over the lower / upper selections.
    auto closure = [&](double theta, bool upper) {
      ++evaluations;
      fluxes_at(theta);
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const Interval gi = line.gradients(i, s[i]);
        total += line.h[i] * (upper ? gi.hi : gi.lo);
      }
      return total;
    };
    const double left = bisect_threshold([&](double t) { return closure(t, true) >= 0.0; }, theta_lo, theta_hi);
    const double right = bisect_threshold([&](double t) { return closure(t, false) > 0.0; }, theta_lo, theta_hi);
    const double theta = 0.5 * (left + std::max(left, right));

    fluxes_at(theta);
    std::vector<Interval> gi(n);
    double s_lo = 0.0, s_hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      gi[i] = line.gradients(i, s[i]);
      s_lo += line.h[i] * gi[i].lo;
      s_hi += line.h[i] * gi[i].hi;
    }
    const double lambda = s_hi > s_lo ? std::clamp(-s_lo / (s_hi - s_lo), 0.0, 1.0) : 0.5;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = gi[i].lo + lambda * (gi[i].hi - gi[i].lo);
      sol.flux.values[i] = s[i];
    }
    for (std::size_t i = 0; i + 1 < n; ++i) sol.u_bar[i + 1] = sol.u_bar[i] + line.h[i] * g[i];
    sol.u_bar[n] = 0.0;
  }

  sol.iterations = evaluations;
  certify(p, params, sol);
  sol.history.push_back({sol.iterations, sol.objective, sol.dual_objective, sol.gap});
  return sol;
}

} // namespace massopt::detail
