// Primal-dual splitting (Chambolle-Pock) for
//
//     min_u  F(K u) - <b, u>,   K u = (w_q grad u(x_q))_q,
//     F(z) = sum_q w_q phi_q(|z_q| / w_q),   F*(y) = sum_q w_q phi_q*(|y_q|),
//
// so the dual variable y is the flux itself. Every certificate projects y
// onto {D^T W y = b} in the W-weighted norm and, in regime L, scales u into
// the feasible set before evaluating the primal.

#include <algorithm>
#include <cmath>
#include <random>
#include <span>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "solver_internal.hpp"

namespace massopt::detail {

namespace {

class Operator {
public:
  explicit Operator(const AuxiliaryProblem& p) : p_(p), d_(p.grid.components()) {
    index_.assign(p.grid.node_count(), -1);
    for (std::size_t i = 0; i < p.grid.node_count(); ++i)
      if (!p.grid.on_boundary(i)) index_[i] = interior_++;

    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t q = 0; q < p.grid.quadrature_count(); ++q) {
      const double w = p.grid.quadrature_weight(q);
      for (const StencilTerm& a : p.grid.quadrature_stencil(q)) {
        if (index_[a.node] < 0) continue;
        for (const StencilTerm& b : p.grid.quadrature_stencil(q)) {
          if (index_[b.node] < 0) continue;
          double dot = 0.0;
          for (int k = 0; k < d_; ++k) dot += a.grad[k] * b.grad[k];
          trip.emplace_back(index_[a.node], index_[b.node], w * dot);
        }
      }
    }
    Eigen::SparseMatrix<double> laplacian(interior_, interior_);
    laplacian.setFromTriplets(trip.begin(), trip.end());
    ldlt_.compute(laplacian);
  }

  int interior() const { return interior_; }
  bool has_interior() const { return interior_ > 0; }

  // y = K u, one vector per quadrature point.
  void apply(const std::vector<double>& u, std::vector<double>& y) const {
    y.assign(p_.grid.quadrature_count() * d_, 0.0);
    for (std::size_t q = 0; q < p_.grid.quadrature_count(); ++q) {
      const double w = p_.grid.quadrature_weight(q);
      for (const StencilTerm& t : p_.grid.quadrature_stencil(q))
        for (int k = 0; k < d_; ++k) y[q * d_ + k] += w * t.grad[k] * u[t.node];
    }
  }

  // u = K^T y restricted to interior nodes (boundary entries zero).
  void adjoint(const std::vector<double>& y, std::vector<double>& u) const {
    u.assign(p_.grid.node_count(), 0.0);
    for (std::size_t q = 0; q < p_.grid.quadrature_count(); ++q) {
      const double w = p_.grid.quadrature_weight(q);
      for (const StencilTerm& t : p_.grid.quadrature_stencil(q)) {
        if (index_[t.node] < 0) continue;
        double dot = 0.0;
        for (int k = 0; k < d_; ++k) dot += y[q * d_ + k] * t.grad[k];
        u[t.node] += w * dot;
      }
    }
  }

  double norm_estimate(int steps) const {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> u(p_.grid.node_count(), 0.0), y, v;
    for (std::size_t i = 0; i < u.size(); ++i)
      if (index_[i] >= 0) u[i] = uni(rng);
    double lambda = 0.0;
    for (int s = 0; s < steps; ++s) {
      double n2 = 0.0;
      for (double x : u) n2 += x * x;
      const double n = std::sqrt(n2);
      if (n == 0.0) return 0.0;
      for (double& x : u) x /= n;
      apply(u, y);
      adjoint(y, v);
      lambda = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) lambda += u[i] * v[i];
      u.swap(v);
    }
    return std::sqrt(std::max(lambda, 0.0));
  }

  // W-weighted projection of y onto {D^T W y = b}.
  std::vector<double> project(const std::vector<double>& y) const {
    if (!has_interior()) return y;
    std::vector<double> kty;
    adjoint(y, kty);
    Eigen::VectorXd r(interior_);
    for (std::size_t i = 0; i < kty.size(); ++i)
      if (index_[i] >= 0) r[index_[i]] = p_.load[i] - kty[i];
    const Eigen::VectorXd corr = ldlt_.solve(r);
    std::vector<double> out = y;
    for (std::size_t q = 0; q < p_.grid.quadrature_count(); ++q)
      for (const StencilTerm& t : p_.grid.quadrature_stencil(q)) {
        if (index_[t.node] < 0) continue;
        for (int k = 0; k < d_; ++k) out[q * d_ + k] += t.grad[k] * corr[index_[t.node]];
      }
    return out;
  }

  bool interior_node(std::size_t i) const { return index_[i] >= 0; }

private:
  const AuxiliaryProblem& p_;
  int d_;
  int interior_ = 0;
  std::vector<int> index_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Largest theta in [0,1] with |theta grad u| within every Lipschitz bound.
double feasible_scale(const AuxiliaryProblem& p, const ScalarField& u) {
  if (p.regime == Regime::superlinear) return 1.0;
  const VectorField du = gradient(p.grid, u);
  double theta = 1.0;
  for (std::size_t q = 0; q < p.grid.quadrature_count(); ++q) {
    const double g = du.norm_at(q);
    if (g > p.lip_bound[q]) theta = std::min(theta, p.lip_bound[q] / g);
  }
  return theta;
}

} // namespace

AuxiliarySolution solve_primal_dual(const AuxiliaryProblem& p, const SolverParams& params) {
  const Operator op(p);
  const int d = p.grid.components();
  const std::size_t nq = p.grid.quadrature_count();

  const double knorm = std::max(op.norm_estimate(params.power_iterations), 1e-300);
  // Safety factor keeps tau sigma ||K||^2 < 1 despite the estimate being a lower bound.
  const double tau = 0.95 / (knorm * params.step_ratio);
  const double sigma = 0.95 * params.step_ratio / knorm;

  std::vector<double> u(p.grid.node_count(), 0.0), ubar = u, y(nq * d, 0.0), ky, kty;

  AuxiliarySolution best;
  best.method = SolverMethod::primal_dual;
  best.u_bar = ScalarField::zeros(p.grid);
  best.flux = VectorField::zeros(p.grid);
  double best_primal = kInf, best_dual = -kInf;
  std::vector<double> best_y = y;

  auto certificate = [&](int it) {
    ScalarField cand{u};
    const double theta = feasible_scale(p, cand);
    for (double& v : cand.values) v *= theta;
    const ExtReal primal = objective_eval(p, cand);
    if (primal.is_finite() && primal.value() < best_primal) {
      best_primal = primal.value();
      best.u_bar = cand;
    }
    VectorField flux{d, op.project(y)};
    const double dual = dual_eval(p, flux);
    if (dual > best_dual) {
      best_dual = dual;
      best.flux = flux;
      best_y = flux.values;
    }
    best.history.push_back({it, best_primal, best_dual, best_primal - best_dual});
    return relative_gap(best_primal, best_dual) <= params.gap_tolerance;
  };

  int it = 0;
  bool done = certificate(0) || !op.has_interior();
  while (!done && it < params.max_iterations) {
    ++it;
    op.apply(ubar, ky);
    for (std::size_t q = 0; q < nq; ++q) {
      std::span<double> yq(y.data() + q * d, static_cast<std::size_t>(d));
      for (int k = 0; k < d; ++k) yq[k] += sigma * ky[q * d + k];
      const double mag = norm(yq);
      if (mag == 0.0) continue;
      const double w = p.grid.quadrature_weight(q);
      const double g = p.local[q].radial_prox(mag / (sigma * w), 1.0 / (sigma * w));
      const double shrink = 1.0 - sigma * w * g / mag;
      for (int k = 0; k < d; ++k) yq[k] *= shrink;
    }
    op.adjoint(y, kty);
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!op.interior_node(i)) continue;
      const double next = u[i] - tau * (kty[i] - p.load[i]);
      ubar[i] = 2.0 * next - u[i];
      u[i] = next;
    }
    const bool check = it % std::max(params.certificate_interval, 1) == 0 || it == params.max_iterations;
    if (check) done = certificate(it);
    if (!done && params.restart_interval > 0 && it % params.restart_interval == 0) {
      u = best.u_bar.values;
      ubar = u;
      y = best_y;
    }
  }

  best.iterations = it;
  certify(p, params, best);
  return best;
}

} // namespace massopt::detail
