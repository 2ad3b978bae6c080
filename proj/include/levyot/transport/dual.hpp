#pragma once

// Dual value mu0(lambda0) - mu1(lambda1) with lambda1 piecewise linear on the
// spatial grid, its gradient by transporting mu0 forward under the frozen
// controls (the discrete adjoint of the backward solve), and projected ascent.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "levyot/transport/hjb.hpp"
#include "levyot/transport/optimize.hpp"

namespace levyot {

struct DualEvaluation {
  double value = 0.0;
  std::vector<double> gradient;       // terminal law (hat weights) minus mu1 hat weights
  std::vector<double> terminal_law;   // forward transport of mu0
  ValueGrid values;
};

/// p <- A^{-T} p for A = I - alpha * (second difference) with identity boundary rows.
inline void apply_inverse_transpose(const std::vector<double>& alpha, std::vector<double>& p) {
  const std::size_t N = p.size();
  std::vector<double> lower(N, 0.0), diag(N), upper(N, 0.0);
  for (std::size_t m = 0; m < N; ++m) {
    diag[m] = 1.0 + 2.0 * alpha[m];
    if (m > 0) lower[m] = -alpha[m - 1];
    if (m + 1 < N) upper[m] = -alpha[m + 1];
  }
  solve_tridiagonal(lower, diag, upper, p);
}

/// Pushes weights through one recorded step: p <- J^T A^{-T} p.
inline std::vector<double> forward_step(const StepOperator& op, std::vector<double> p) {
  apply_inverse_transpose(op.alpha, p);
  std::vector<double> q(p.size(), 0.0);
  for (std::size_t m = 0; m < p.size(); ++m)
    for (std::size_t r = op.row_ptr[m]; r < op.row_ptr[m + 1]; ++r) q[op.col[r]] += op.wt[r] * p[m];
  return q;
}

inline DualEvaluation evaluate_dual_full(const TransportInstance& inst, const std::vector<double>& lambda1,
                                         GridConfig cfg) {
  cfg.record_operators = true;
  DualEvaluation ev;
  ev.values = solve_hjb(inst, lambda1, cfg);
  const std::vector<double> w0 = inst.mu0.hat_weights(cfg.grid), w1 = inst.mu1.hat_weights(cfg.grid);
  double a = 0.0, b = 0.0;
  for (std::size_t m = 0; m < w0.size(); ++m) {
    a += w0[m] * ev.values.v[0][m];
    b += w1[m] * lambda1[m];
  }
  ev.value = a - b;
  std::vector<double> p = w0;
  for (const StepOperator& op : ev.values.ops) p = forward_step(op, std::move(p));
  ev.terminal_law = p;
  ev.gradient.resize(p.size());
  for (std::size_t m = 0; m < p.size(); ++m) ev.gradient[m] = p[m] - w1[m];
  return ev;
}

/// Integrals against hat weights integrate the grid interpolant exactly.
inline double evaluate_dual(const TransportInstance& inst, const std::vector<double>& lambda1, const GridConfig& cfg) {
  const ValueGrid vg = solve_hjb(inst, lambda1, cfg);
  const std::vector<double> w0 = inst.mu0.hat_weights(cfg.grid), w1 = inst.mu1.hat_weights(cfg.grid);
  double a = 0.0, b = 0.0;
  for (std::size_t m = 0; m < w0.size(); ++m) {
    a += w0[m] * vg.v[0][m];
    b += w1[m] * lambda1[m];
  }
  return a - b;
}

inline double evaluate_dual(const TransportInstance& inst, const std::function<double(double)>& lambda1,
                            const GridConfig& cfg) {
  std::vector<double> l;
  for (double x : cfg.grid.nodes()) l.push_back(lambda1(x));
  return evaluate_dual(inst, l, cfg);
}

struct DualConfig {
  GridConfig grid{Grid1D{-8.0, 8.0, 400}, 50};
  double B = 50.0;
  double gtol = 1e-3;
  std::size_t max_iter = 1000;
  std::size_t memory = 10;
  double likely_infeasible = 1e3;
  std::size_t knot_stride = 1;  // lambda1 is linear between every knot_stride-th grid node
};

/// Grid nodes used as knots of the potential: every stride-th node plus both ends.
inline std::vector<std::size_t> potential_knots(const Grid1D& g, std::size_t stride) {
  require(stride >= 1, "dual ascent: knot stride must be >= 1");
  std::vector<std::size_t> k;
  for (std::size_t m = 0; m < g.M; m += stride) k.push_back(m);
  k.push_back(g.M);
  return k;
}

/// Values on the grid of the potential that is linear between knots.
inline std::vector<double> expand_potential(const std::vector<std::size_t>& knots, const std::vector<double>& vals,
                                            std::size_t n_nodes) {
  std::vector<double> out(n_nodes);
  for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
    const std::size_t a = knots[j], b = knots[j + 1];
    for (std::size_t m = a; m <= b; ++m) {
      const double f = static_cast<double>(m - a) / static_cast<double>(b - a);
      out[m] = (1.0 - f) * vals[j] + f * vals[j + 1];
    }
  }
  return out;
}

struct DualResult {
  double value = 0.0;                // best value found
  std::vector<double> lambda1;       // maximizer on the grid nodes
  std::vector<double> history;       // dual value at every accepted iterate
  double grad_norm = 0.0;            // projected gradient sup-norm at the end
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  bool line_search_failed = false;
  bool likely_infeasible = false;
};

inline DualResult dual_ascent(const TransportInstance& inst, const DualConfig& cfg) {
  require(cfg.B > 0.0, "dual ascent: bound B must be positive");
  cfg.grid.validate();
  const std::size_t N = cfg.grid.grid.size();
  const std::vector<std::size_t> knots = potential_knots(cfg.grid.grid, cfg.knot_stride);
  const std::size_t nk = knots.size();
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> best_l;
  opt::Objective neg = [&](const std::vector<double>& z, std::vector<double>& g) {
    const std::vector<double> l = expand_potential(knots, z, N);
    const DualEvaluation ev = evaluate_dual_full(inst, l, cfg.grid);
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t j = 0; j + 1 < nk; ++j) {
      const std::size_t a = knots[j], b = knots[j + 1];
      for (std::size_t m = a; m <= b; ++m) {
        const double f = static_cast<double>(m - a) / static_cast<double>(b - a);
        if (m < b) g[j] -= (1.0 - f) * ev.gradient[m];
        if (m > a) g[j + 1] -= f * ev.gradient[m];
      }
    }
    if (ev.value > best) {
      best = ev.value;
      best_l = l;
    }
    return -ev.value;
  };
  opt::BoxLbfgsConfig oc;
  oc.max_iter = cfg.max_iter;
  oc.memory = cfg.memory;
  oc.gtol = cfg.gtol;
  const opt::BoxLbfgsResult r = opt::minimize_box(neg, std::vector<double>(nk, 0.0), std::vector<double>(nk, -cfg.B),
                                                  std::vector<double>(nk, cfg.B), oc);
  DualResult out;
  out.value = best;
  out.lambda1 = best_l;
  for (double f : r.history) out.history.push_back(-f);
  out.grad_norm = r.pg_norm;
  out.iterations = r.iterations;
  out.evaluations = r.evaluations;
  out.converged = r.converged;
  out.line_search_failed = r.line_search_failed;
  out.likely_infeasible = best > cfg.likely_infeasible;
  return out;
}

}  // namespace levyot
