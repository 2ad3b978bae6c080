#pragma once

// Primal problem over piecewise-constant deterministic schedules. For a
// deterministic schedule the terminal law has characteristic function
// cf_mu0(u) exp(sum_k dt psi_k(u)); the marginal constraint is imposed on a
// frequency grid by an augmented Lagrangian.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "levyot/quadrature.hpp"
#include "levyot/transport/instance.hpp"
#include "levyot/transport/optimize.hpp"

namespace levyot {

inline std::vector<double> default_primal_u_grid() {
  std::vector<double> u;
  for (int i = 0; i <= 40; ++i) u.push_back(-5.0 + 0.25 * i);
  return u;
}

struct PrimalConfig {
  std::size_t K = 20;
  std::vector<double> rho{10.0, 1e2, 1e3, 1e4};
  std::vector<double> u_grid = default_primal_u_grid();
  double ftol = 1e-2;            // feasibility tolerance at the largest penalty
  double target_residual = 1e-7; // multiplier updates stop below this
  std::size_t max_outer = 25;    // multiplier updates per penalty level
  std::size_t inner_iter = 400;
};

struct PrimalResult {
  double value = 0.0;
  std::vector<std::vector<double>> schedule;  // theta_k on [k/K, (k+1)/K)
  double feasibility_residual = 0.0;          // max_u |cf_T(u) - cf_mu1(u)|
  bool likely_infeasible = false;
  double final_rho = 0.0;
  std::size_t inner_iterations = 0;
};

/// Integral of L(t, ., theta) over [a, b] with 8-point Gauss-Legendre.
inline double step_cost(const CostFunction& L, double a, double b, std::span<const double> p) {
  const quad::Rule r = quad::legendre_on(a, b, 8);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * L(r.nodes[i], 0.0, p);
  return acc;
}

/// Terminal characteristic function of mu0 followed by the schedule.
inline std::vector<Complex> schedule_terminal_cf(const TransportInstance& inst,
                                                 const std::vector<std::vector<double>>& schedule,
                                                 const std::vector<double>& u_grid) {
  const double dt = 1.0 / static_cast<double>(schedule.size());
  std::vector<Complex> expo(u_grid.size(), 0.0);
  for (const auto& th : schedule) {
    const LevyTriplet t = inst.fam.evaluate(th);
    for (std::size_t j = 0; j < u_grid.size(); ++j) expo[j] += dt * levy_exponent(t, u_grid[j]);
  }
  std::vector<Complex> out(u_grid.size());
  for (std::size_t j = 0; j < u_grid.size(); ++j) out[j] = inst.mu0.cf(u_grid[j]) * std::exp(expo[j]);
  return out;
}

inline double schedule_cost(const TransportInstance& inst, const std::vector<std::vector<double>>& schedule) {
  const double K = static_cast<double>(schedule.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < schedule.size(); ++k)
    acc += step_cost(inst.L, static_cast<double>(k) / K, static_cast<double>(k + 1) / K, schedule[k]);
  return acc;
}

inline PrimalResult solve_primal_deterministic(const TransportInstance& inst, const PrimalConfig& cfg) {
  require(cfg.K >= 1, "primal: need at least one step");
  require(!cfg.rho.empty(), "primal: penalty list is empty");
  require(!cfg.u_grid.empty(), "primal: frequency grid is empty");
  if (!is_state_independent(inst.L, inst.fam))
    throw ValidationError("primal solver requires a state-independent cost L(t, theta)");
  const std::size_t K = cfg.K, P = inst.fam.n_params(), U = cfg.u_grid.size(), n = K * P;
  const double dt = 1.0 / static_cast<double>(K);
  std::vector<double> lo(n), hi(n), z0(n), width(P);
  const std::vector<double> ctr = inst.fam.center();
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < P; ++i) {
      lo[k * P + i] = inst.fam.box()[i].lo;
      hi[k * P + i] = inst.fam.box()[i].hi;
      z0[k * P + i] = ctr[i];
    }
  for (std::size_t i = 0; i < P; ++i) width[i] = inst.fam.box()[i].hi - inst.fam.box()[i].lo;
  std::vector<Complex> target(U);
  for (std::size_t j = 0; j < U; ++j) target[j] = inst.mu1.cf(cfg.u_grid[j]);

  auto unpack = [&](const std::vector<double>& z) {
    std::vector<std::vector<double>> s(K, std::vector<double>(P));
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t i = 0; i < P; ++i) s[k][i] = z[k * P + i];
    return s;
  };
  // finite-difference step for coordinate i, one-sided at the box faces
  auto fd = [&](const std::vector<double>& th, std::size_t i, auto&& eval) {
    const double hstep = 1e-6 * std::max(width[i], 1e-12);
    std::vector<double> a = th, b = th;
    a[i] = std::min(th[i] + hstep, inst.fam.box()[i].hi);
    b[i] = std::max(th[i] - hstep, inst.fam.box()[i].lo);
    if (a[i] == b[i]) return 0.0;
    return (eval(a) - eval(b)) / (a[i] - b[i]);
  };

  std::vector<double> y(2 * U, 0.0);  // multipliers for Re and Im residuals
  double rho = cfg.rho.front();
  std::vector<Complex> psi_acc(U), terminal(U);
  std::vector<std::vector<Complex>> psi(K, std::vector<Complex>(U));
  auto fill = [&](const std::vector<double>& z) {
    std::fill(psi_acc.begin(), psi_acc.end(), Complex(0.0));
    for (std::size_t k = 0; k < K; ++k) {
      const LevyTriplet t = inst.fam.evaluate(std::span<const double>(&z[k * P], P));
      for (std::size_t j = 0; j < U; ++j) {
        psi[k][j] = levy_exponent(t, cfg.u_grid[j]);
        psi_acc[j] += dt * psi[k][j];
      }
    }
    for (std::size_t j = 0; j < U; ++j) terminal[j] = inst.mu0.cf(cfg.u_grid[j]) * std::exp(psi_acc[j]);
  };
  opt::Objective obj = [&](const std::vector<double>& z, std::vector<double>& g) {
    fill(z);
    double f = 0.0;
    std::vector<double> wr(U), wi(U);  // d f / d Re r_j and d f / d Im r_j
    for (std::size_t j = 0; j < U; ++j) {
      const Complex r = terminal[j] - target[j];
      f += y[2 * j] * r.real() + y[2 * j + 1] * r.imag() + 0.5 * rho * std::norm(r);
      wr[j] = y[2 * j] + rho * r.real();
      wi[j] = y[2 * j + 1] + rho * r.imag();
    }
    for (std::size_t k = 0; k < K; ++k) {
      const double a = dt * static_cast<double>(k), b = k + 1 == K ? 1.0 : dt * static_cast<double>(k + 1);
      const std::vector<double> th(z.begin() + static_cast<std::ptrdiff_t>(k * P),
                                   z.begin() + static_cast<std::ptrdiff_t>((k + 1) * P));
      f += step_cost(inst.L, a, b, th);
      for (std::size_t i = 0; i < P; ++i) {
        double gi = fd(th, i, [&](const std::vector<double>& q) { return step_cost(inst.L, a, b, q); });
        const double hstep = 1e-6 * std::max(width[i], 1e-12);
        std::vector<double> qa = th, qb = th;
        qa[i] = std::min(th[i] + hstep, inst.fam.box()[i].hi);
        qb[i] = std::max(th[i] - hstep, inst.fam.box()[i].lo);
        if (qa[i] != qb[i]) {
          const LevyTriplet ta = inst.fam.evaluate(qa), tb = inst.fam.evaluate(qb);
          for (std::size_t j = 0; j < U; ++j) {
            const Complex dpsi = (levy_exponent(ta, cfg.u_grid[j]) - levy_exponent(tb, cfg.u_grid[j])) / (qa[i] - qb[i]);
            const Complex dr = terminal[j] * dt * dpsi;
            gi += wr[j] * dr.real() + wi[j] * dr.imag();
          }
        }
        g[k * P + i] = gi;
      }
    }
    return f;
  };

  PrimalResult out;
  std::vector<double> z = z0;
  auto residual = [&](const std::vector<double>& zz) {
    fill(zz);
    double m = 0.0;
    for (std::size_t j = 0; j < U; ++j) m = std::max(m, std::abs(terminal[j] - target[j]));
    return m;
  };
  opt::BoxLbfgsConfig oc;
  oc.max_iter = cfg.inner_iter;
  oc.gtol = 1e-10;
  double res = residual(z);
  bool done = false;
  for (double r : cfg.rho) {
    rho = r;
    out.final_rho = r;
    for (std::size_t outer = 0; outer < cfg.max_outer; ++outer) {
      const opt::BoxLbfgsResult sol = opt::minimize_box(obj, z, lo, hi, oc);
      out.inner_iterations += sol.iterations;
      z = sol.x;
      res = residual(z);
      for (std::size_t j = 0; j < U; ++j) {
        const Complex d = terminal[j] - target[j];
        y[2 * j] += rho * d.real();
        y[2 * j + 1] += rho * d.imag();
      }
      if (res <= cfg.target_residual) {
        done = true;
        break;
      }
    }
    if (done) break;
  }
  out.schedule = unpack(z);
  out.value = schedule_cost(inst, out.schedule);
  out.feasibility_residual = res;
  out.likely_infeasible = res > cfg.ftol;
  return out;
}

}  // namespace levyot
