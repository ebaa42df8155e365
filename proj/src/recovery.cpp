#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <json.hpp>

#include "massopt/error.hpp"
#include "massopt/recovery.hpp"

namespace massopt {

namespace {

// dc*(x, s) with s snapped onto the finiteness threshold when it sits within
// the Lipschitz slack above it. Empty when s is infeasible.
Interval inclusion_interval(const LocalCost& c, double g) {
  const double s = 0.5 * g * g;
  const double top = c.finiteness_threshold();
  if (s <= top) return c.subdifferential(s);
  const double bound = c.lipschitz_bound();
  if (std::abs(g) <= bound + kLipschitzSlack) return c.subdifferential(top);
  return {kInf, -kInf};
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Relative L1 distance sum w|a-b| / sum w|b|.
double relative_l1(const Grid& grid, const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t q = 0; q < a.size(); ++q) {
    const double w = grid.quadrature_weight(q);
    num += w * std::abs(a[q] - b[q]);
    den += w * std::abs(b[q]);
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : kInf;
  return num / den;
}

struct Stiffness {
  std::vector<int> index;  // node -> unknown, -1 when fixed
  Eigen::SparseMatrix<double> matrix;
};

void add_outer(std::vector<Eigen::Triplet<double>>& trip, const std::vector<int>& index, const PointStencil& st,
               double weight, int d) {
  for (const StencilTerm& a : st) {
    if (index[a.node] < 0) continue;
    for (const StencilTerm& b : st) {
      if (index[b.node] < 0) continue;
      double v = 0.0;
      for (int k = 0; k < d; ++k) v += a.grad[k] * b.grad[k];
      if (v != 0.0) trip.emplace_back(index[a.node], index[b.node], weight * v);
    }
  }
}

// Applies the full (boundary-inclusive) weighted stiffness to u.
std::vector<double> stiffness_apply(const Grid& grid, const DiscreteMeasure& mu, const ScalarField& u) {
  const int d = grid.components();
  std::vector<double> out(grid.node_count(), 0.0);
  auto accumulate = [&](const PointStencil& st, double weight) {
    std::array<double, 2> grad{0.0, 0.0};
    for (const StencilTerm& t : st)
      for (int k = 0; k < d; ++k) grad[k] += t.grad[k] * u[t.node];
    for (const StencilTerm& t : st) {
      double v = 0.0;
      for (int k = 0; k < d; ++k) v += t.grad[k] * grad[k];
      out[t.node] += weight * v;
    }
  };
  for (std::size_t q = 0; q < grid.quadrature_count(); ++q)
    if (mu.density[q] != 0.0) accumulate(grid.quadrature_stencil(q), grid.quadrature_weight(q) * mu.density[q]);
  for (const Atom& atom : mu.atoms)
    if (auto st = grid.stencil_at(atom.location)) accumulate(*st, atom.mass);
  return out;
}

} // namespace

DiscreteMeasure recover_density_SL(const AuxiliarySolution& sol, const AuxiliaryProblem& p) {
  if (p.regime != Regime::superlinear)
    throw Error(ErrorCode::regime_mismatch, "recover_density_SL needs a superlinear cost");
  DiscreteMeasure mu;
  mu.density.assign(p.grid.quadrature_count(), 0.0);
  for (std::size_t q = 0; q < p.grid.quadrature_count(); ++q) {
    const double g = sol.grad_u.norm_at(q);
    const Interval dc = p.local[q].subdifferential(0.5 * g * g);
    double a;
    if (dc.degenerate()) {
      a = dc.lo;
    } else if (g > 0.0) {
      // Least-squares fit of a grad u to the flux, projected onto the interval.
      a = dc.clamp(dot(sol.flux.at(q), sol.grad_u.at(q)) / (g * g));
    } else {
      a = std::isfinite(dc.hi) ? 0.5 * (dc.lo + dc.hi) : dc.lo;
    }
    mu.density[q] = std::max(a, 0.0);
  }
  return mu;
}

DiscreteMeasure recover_measure_L_1d(const AuxiliarySolution& sol, const AuxiliaryProblem& p, double max_density) {
  if (p.regime != Regime::linear) throw Error(ErrorCode::regime_mismatch, "recover_measure_L_1d needs a linear cost");
  if (p.grid.kind() == GridKind::rectangle)
    throw Error(ErrorCode::unsupported_grid, "recover_measure_L_1d needs an interval or radial grid; use "
                                             "recover_via_regularization on rectangles");
  DiscreteMeasure mu;
  mu.density.assign(p.grid.quadrature_count(), 0.0);
  for (std::size_t q = 0; q < p.grid.quadrature_count(); ++q) {
    const double g = sol.grad_u.at(q)[0];
    const double v = sol.flux.at(q)[0];
    const Interval dc = inclusion_interval(p.local[q], g);
    double a;
    if (g != 0.0 && v != 0.0)
      a = std::abs(v / g);
    else
      a = dc.empty() ? 0.0 : std::max(dc.lo, 0.0);
    if (a > max_density) {
      mu.atoms.push_back({p.grid.quadrature_point(q), (a - max_density) * p.grid.quadrature_weight(q)});
      a = max_density;
    }
    mu.density[q] = a;
  }
  return mu;
}

RegularizationResult recover_via_regularization(const AuxiliaryProblem& p, const RegularizationOptions& opt) {
  if (p.regime != Regime::linear)
    throw Error(ErrorCode::regime_mismatch, "regularization applies to linear-regime costs only");
  if (opt.schedule.empty()) throw Error(ErrorCode::schedule_too_short, "empty epsilon schedule");

  RegularizationResult out;
  std::vector<double> previous;
  for (double eps : opt.schedule) {
    const CostFunction cost(make_regularized_cost(p.cost.base_ptr(), eps), p.cost.growth(), p.cost.spatial_weight());
    const AuxiliaryProblem reg = assemble_problem(p.grid, cost, p.source, false);
    out.solution = solve_auxiliary(reg, opt.solver);
    out.measure = recover_density_SL(out.solution, reg);
    const double change = previous.empty() ? 0.0 : relative_l1(p.grid, out.measure.density, previous);
    out.steps.push_back({eps, out.solution.objective, out.solution.relative_gap, change});
    previous = out.measure.density;
  }

  out.cauchy = out.steps.size() >= 2 && out.steps.back().l1_change <= opt.cauchy_tolerance;
  if (opt.require_cauchy && !out.cauchy)
    throw Error(ErrorCode::schedule_too_short,
                out.steps.size() < 2 ? "a Cauchy check needs at least two epsilon values"
                                     : "relative L1 change " + std::to_string(out.steps.back().l1_change) +
                                           " at the last step exceeds " + std::to_string(opt.cauchy_tolerance));

  double mass = 0.0, volume = 0.0;
  for (std::size_t q = 0; q < p.grid.quadrature_count(); ++q) {
    mass += p.grid.quadrature_weight(q) * out.measure.density[q];
    volume += p.grid.quadrature_weight(q);
  }
  const double mean = volume > 0.0 ? mass / volume : 0.0;
  if (mean > 0.0)
    for (std::size_t q = 0; q < p.grid.quadrature_count(); ++q)
      if (out.measure.density[q] >= opt.concentration_ratio * mean) out.concentration.push_back(q);
  return out;
}

EnergyResult energy_eval(const Grid& grid, const DiscreteMeasure& mu, const SourceTerm& f) {
  check_measure(grid, mu);
  const int d = grid.components();
  const std::size_t nn = grid.node_count();
  const std::vector<double> b = load_vector(grid, f);

  // Full node graph of the stiffness pattern, used to find the nodes mu does
  // not reach and floating components that never touch the boundary.
  std::vector<double> diag(nn, 0.0);
  std::vector<std::vector<std::size_t>> adj(nn);
  auto visit = [&](const PointStencil& st, double weight) {
    if (weight <= 0.0) return;
    for (const StencilTerm& a : st) {
      double g2 = 0.0;
      for (int k = 0; k < d; ++k) g2 += a.grad[k] * a.grad[k];
      diag[a.node] += weight * g2;
      for (const StencilTerm& c : st) {
        double v = 0.0;
        for (int k = 0; k < d; ++k) v += a.grad[k] * c.grad[k];
        if (v != 0.0 && c.node != a.node) adj[a.node].push_back(c.node);
      }
    }
  };
  std::vector<std::optional<PointStencil>> atom_stencils;
  for (std::size_t q = 0; q < grid.quadrature_count(); ++q)
    visit(grid.quadrature_stencil(q), grid.quadrature_weight(q) * mu.density[q]);
  for (const Atom& atom : mu.atoms) {
    atom_stencils.push_back(grid.stencil_at(atom.location));
    if (atom_stencils.back()) visit(*atom_stencils.back(), atom.mass);
  }

  double bscale = 0.0;
  for (double v : b) bscale = std::max(bscale, std::abs(v));
  const double btol = 1e-13 * std::max(bscale, 1e-300);

  std::vector<int> index(nn, -1);
  std::vector<int> component(nn, -1);
  for (std::size_t s = 0; s < nn; ++s) {
    if (grid.on_boundary(s) || component[s] >= 0) continue;
    if (diag[s] <= 0.0) {
      if (std::abs(b[s]) > btol)
        throw Error(ErrorCode::unbounded, "the source charges a node where the measure has no stiffness");
      continue;
    }
    // Flood the component; it is anchored if it couples to a boundary node.
    std::vector<std::size_t> stack{s}, members;
    component[s] = static_cast<int>(s);
    bool anchored = false;
    double charge = 0.0;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      members.push_back(i);
      charge += b[i];
      for (std::size_t j : adj[i]) {
        if (grid.on_boundary(j)) {
          anchored = true;
          continue;
        }
        if (component[j] < 0 && diag[j] > 0.0) {
          component[j] = static_cast<int>(s);
          stack.push_back(j);
        }
      }
    }
    if (!anchored && std::abs(charge) > btol * static_cast<double>(members.size()))
      throw Error(ErrorCode::unbounded, "the source has net charge on a component the measure does not connect to "
                                        "the boundary");
    std::sort(members.begin(), members.end());
    // A floating component with zero net charge is pinned at its first node.
    for (std::size_t k = anchored ? 0 : 1; k < members.size(); ++k) index[members[k]] = 0;
  }
  int n = 0;
  for (int& i : index)
    if (i >= 0) i = n++;

  EnergyResult res;
  res.state = ScalarField::zeros(grid);
  if (n == 0) return res;

  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t q = 0; q < grid.quadrature_count(); ++q)
    if (mu.density[q] > 0.0)
      add_outer(trip, index, grid.quadrature_stencil(q), grid.quadrature_weight(q) * mu.density[q], d);
  for (std::size_t k = 0; k < mu.atoms.size(); ++k)
    if (atom_stencils[k]) add_outer(trip, index, *atom_stencils[k], mu.atoms[k].mass, d);
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd rhs(n);
  for (std::size_t i = 0; i < nn; ++i)
    if (index[i] >= 0) rhs[index[i]] = b[i];

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(1e-13);
  cg.setMaxIterations(std::max(10 * n, 100));
  cg.compute(K);
  Eigen::VectorXd x = cg.solve(rhs);
  res.iterations = static_cast<int>(cg.iterations());
  if (cg.info() != Eigen::Success) {
    // Badly scaled weights (r^{n-1} near a radial centre) can stall CG.
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::unbounded, "weighted stiffness is singular");
    x = ldlt.solve(rhs);
  }
  if (!x.allFinite()) throw Error(ErrorCode::unbounded, "energy solve diverged");

  for (std::size_t i = 0; i < nn; ++i)
    if (index[i] >= 0) res.state[i] = x[index[i]];
  const Eigen::VectorXd kx = K * x;
  res.energy = 0.5 * x.dot(kx) - rhs.dot(x);
  const double floor = -1e12 * std::max(1.0, rhs.norm());
  if (!(res.energy > floor)) throw Error(ErrorCode::unbounded, "energy below the divergence floor");
  res.compliance = -res.energy;
  return res;
}

ExtReal cost_eval(const Grid& grid, const DiscreteMeasure& mu, const CostFunction& cost) {
  ExtReal total(0.0);
  for (std::size_t q = 0; q < grid.quadrature_count(); ++q)
    total += grid.quadrature_weight(q) * cost.at(grid.quadrature_point(q), q).value(mu.density[q]);
  for (const Atom& atom : mu.atoms) total += atom.mass * (cost.weight_at(atom.location) * cost.base().recession());
  if (mu.boundary_mass > 0.0) total += mu.boundary_mass * cost.base().recession();
  return total;
}

double OptimalityReport::worst() const {
  return std::max({pde_residual, inclusion_violation, singular_saturation_error, boundary_mass,
                   duality_identity_error});
}

OptimalityReport verify_conditions(const DiscreteMeasure& mu, const AuxiliarySolution& sol,
                                   const AuxiliaryProblem& p, const VerifyOptions& opt) {
  OptimalityReport r;
  r.regime = p.regime;
  r.heterogeneous = !p.cost.homogeneous();
  r.objective = sol.objective;
  r.boundary_mass = mu.boundary_mass;

  // (1) weak residual of -div(mu grad u) = f over interior nodes.
  const std::vector<double> ku = stiffness_apply(p.grid, mu, sol.u_bar);
  double r2 = 0.0, b2 = 0.0;
  for (std::size_t i = 0; i < ku.size(); ++i) {
    if (p.grid.on_boundary(i)) continue;
    r2 += (ku[i] - p.load[i]) * (ku[i] - p.load[i]);
    b2 += p.load[i] * p.load[i];
  }
  r.pde_residual = b2 > 0.0 ? std::sqrt(r2 / b2) : std::sqrt(r2);

  auto excluded = [&](const Point& x) {
    if (opt.exclusion_radius <= 0.0) return false;
    for (const Atom& atom : p.source.atoms)
      if (std::hypot(x[0] - atom.location[0], x[1] - atom.location[1]) < opt.exclusion_radius) return true;
    return false;
  };

  // (2) Fenchel equality a s = c*(s) + c(a) where a is above the floor.
  const double amax = mu.density.empty() ? 0.0 : *std::max_element(mu.density.begin(), mu.density.end());
  const double floor = opt.density_floor * amax;
  for (std::size_t q = 0; q < p.grid.quadrature_count(); ++q) {
    const double g = sol.grad_u.norm_at(q);
    if (p.regime == Regime::linear) r.lipschitz_excess = std::max(r.lipschitz_excess, g - p.lip_bound[q]);
    const double a = mu.density[q];
    if (!(a > floor) || excluded(p.grid.quadrature_point(q))) continue;
    ++r.checked_points;
    const LocalCost& c = p.local[q];
    const Interval dc = inclusion_interval(c, g);
    if (dc.empty()) {
      // Gradient beyond the Lipschitz bound: no density is admissible.
      r.inclusion_violation = std::max(r.inclusion_violation, g - c.lipschitz_bound());
      r.inclusion_distance = kInf;
      continue;
    }
    const double s = std::min(0.5 * g * g, c.finiteness_threshold());
    const ExtReal cs = c.conjugate(s), ca = c.value(a);
    const double err = (cs.is_finite() && ca.is_finite())
                           ? std::abs(a * s - cs.value() - ca.value()) / (1.0 + std::abs(a * s))
                           : kInf;
    r.inclusion_violation = std::max(r.inclusion_violation, err);
    r.inclusion_distance = std::max(r.inclusion_distance, dc.distance(a) / (1.0 + std::abs(a)));
  }
  r.lipschitz_excess = std::max(r.lipschitz_excess, 0.0);

  // (3) |grad u|^2/2 = c_inf(x,1) on the atoms, with the interpolated gradient.
  for (const Atom& atom : mu.atoms) {
    if (excluded(atom.location)) continue;
    const ExtReal rec = p.cost.weight_at(atom.location) * p.cost.base().recession();
    if (rec.is_infinite()) {
      r.singular_saturation_error = DBL_MAX;
      continue;
    }
    const auto grad = gradient_at(p.grid, sol.u_bar, atom.location);
    const double s = 0.5 * (grad[0] * grad[0] + grad[1] * grad[1]);
    r.singular_saturation_error = std::max(r.singular_saturation_error, std::abs(s - rec.value()));
  }

  // (5) E_f(mu) - C(mu) = I_{f,c}.
  r.cost = cost_eval(p.grid, mu, p.cost);
  try {
    r.energy = energy_eval(p.grid, mu, p.source).energy;
    r.duality_identity_error =
        r.cost.is_finite() ? std::abs(r.energy - r.cost.value() - sol.objective) : DBL_MAX;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::unbounded) throw;
    r.energy = -DBL_MAX;
    r.duality_identity_error = DBL_MAX;
  }
  for (double* v : {&r.inclusion_violation, &r.inclusion_distance})
    if (!std::isfinite(*v)) *v = DBL_MAX;
  return r;
}

std::string report_to_json(const OptimalityReport& r) {
  nlohmann::ordered_json j;
  j["pde_residual"] = r.pde_residual;
  j["inclusion_violation"] = r.inclusion_violation;
  j["singular_saturation_error"] = r.singular_saturation_error;
  j["boundary_mass"] = r.boundary_mass;
  j["duality_identity_error"] = r.duality_identity_error;
  j["inclusion_distance"] = r.inclusion_distance;
  j["lipschitz_excess"] = r.lipschitz_excess;
  j["energy"] = r.energy;
  j["compliance"] = -r.energy;
  if (r.cost.is_finite())
    j["cost"] = r.cost.value();
  else
    j["cost"] = "+inf";
  j["objective"] = r.objective;
  j["regime"] = std::string(to_string(r.regime));
  j["checked_points"] = r.checked_points;
  j["notes"] = {
      {"atom_gradient", "interpolated gradient of u used in place of the tangential gradient"},
      {"lavrentiev", r.heterogeneous ? "assumed absent for the heterogeneous cost" : "not applicable"},
  };
  return j.dump(2) + "\n";
}

} // namespace massopt
