#pragma once

// Box-constrained limited-memory BFGS with projected backtracking.

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

#include "levyot/error.hpp"

namespace levyot::opt {

/// Returns f(x) and writes the gradient.
using Objective = std::function<double(const std::vector<double>&, std::vector<double>&)>;

struct BoxLbfgsConfig {
  std::size_t max_iter = 200;
  std::size_t memory = 10;
  double gtol = 1e-8;  // sup-norm of the projected gradient
  double ftol = 0.0;   // relative decrease below which the run stops
};

struct BoxLbfgsResult {
  std::vector<double> x;
  double f = 0.0;
  double pg_norm = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  bool line_search_failed = false;
  std::vector<double> history;  // f at every accepted iterate, starting point included
};

inline BoxLbfgsResult minimize_box(const Objective& fun, std::vector<double> x0, const std::vector<double>& lo,
                                   const std::vector<double>& hi, const BoxLbfgsConfig& cfg) {
  const std::size_t n = x0.size();
  require(lo.size() == n && hi.size() == n, "optimizer: bound sizes differ from the start point");
  auto proj = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  };
  BoxLbfgsResult r;
  r.x = std::move(x0);
  proj(r.x);
  std::vector<double> g(n), gn(n), xn(n), d(n);
  r.f = fun(r.x, g);
  ++r.evaluations;
  if (!std::isfinite(r.f)) throw NumericalError("optimizer: objective is not finite at the start point");
  r.history.push_back(r.f);

  auto pg_norm = [&](const std::vector<double>& x, const std::vector<double>& gr) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(std::clamp(x[i] - gr[i], lo[i], hi[i]) - x[i]));
    return m;
  };
  auto is_fixed = [&](std::size_t i, const std::vector<double>& x, const std::vector<double>& gr) {
    return (x[i] <= lo[i] && gr[i] > 0.0) || (x[i] >= hi[i] && gr[i] < 0.0);
  };

  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;
  for (r.iterations = 0; r.iterations < cfg.max_iter; ++r.iterations) {
    r.pg_norm = pg_norm(r.x, g);
    if (r.pg_norm <= cfg.gtol) {
      r.converged = true;
      break;
    }
    // two-loop recursion on the free variables
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = is_fixed(i, r.x, g) ? 0.0 : g[i];
    std::vector<double> a(S.size());
    for (std::size_t j = S.size(); j-- > 0;) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += S[j][i] * q[i];
      a[j] = rho[j] * s;
      for (std::size_t i = 0; i < n; ++i) q[i] -= a[j] * Y[j][i];
    }
    double gamma = 1.0;
    if (!S.empty()) {
      double sy = 0.0, yy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        sy += S.back()[i] * Y.back()[i];
        yy += Y.back()[i] * Y.back()[i];
      }
      gamma = sy / yy;
    } else {
      double gmax = 0.0;
      for (double v : q) gmax = std::max(gmax, std::abs(v));
      gamma = gmax > 1.0 ? 1.0 / gmax : 1.0;
    }
    for (double& v : q) v *= gamma;
    for (std::size_t j = 0; j < S.size(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += Y[j][i] * q[i];
      const double b = rho[j] * s;
      for (std::size_t i = 0; i < n; ++i) q[i] += (a[j] - b) * S[j][i];
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = is_fixed(i, r.x, g) ? 0.0 : -q[i];

    bool accepted = false;
    double f_new = r.f;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) slope += g[i] * d[i];
      if (!(slope < 0.0)) {
        double gmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) gmax = std::max(gmax, std::abs(g[i]));
        for (std::size_t i = 0; i < n; ++i) d[i] = is_fixed(i, r.x, g) ? 0.0 : -g[i] / std::max(gmax, 1.0);
        S.clear();
        Y.clear();
        rho.clear();
      }
      double t = 1.0;
      for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
        for (std::size_t i = 0; i < n; ++i) xn[i] = r.x[i] + t * d[i];
        proj(xn);
        double dec = 0.0;
        for (std::size_t i = 0; i < n; ++i) dec += g[i] * (xn[i] - r.x[i]);
        if (dec >= 0.0) continue;
        const double fn = fun(xn, gn);
        ++r.evaluations;
        if (std::isfinite(fn) && fn <= r.f + 1e-4 * dec) {
          f_new = fn;
          accepted = true;
          break;
        }
      }
      if (!accepted && attempt == 0) {
        // fall back to a scaled steepest-descent direction
        double gmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) gmax = std::max(gmax, std::abs(g[i]));
        for (std::size_t i = 0; i < n; ++i) d[i] = is_fixed(i, r.x, g) ? 0.0 : -g[i] / std::max(gmax, 1.0);
        S.clear();
        Y.clear();
        rho.clear();
      }
    }
    if (!accepted) {
      r.line_search_failed = true;
      break;
    }
    std::vector<double> s(n), y(n);
    double sy = 0.0, ss = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xn[i] - r.x[i];
      y[i] = gn[i] - g[i];
      sy += s[i] * y[i];
      ss += s[i] * s[i];
      yy += y[i] * y[i];
    }
    if (sy > 1e-12 * std::sqrt(ss * yy)) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (S.size() > cfg.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    const double fprev = r.f;
    r.x = xn;
    g = gn;
    r.f = f_new;
    r.history.push_back(r.f);
    if (cfg.ftol > 0.0 && fprev - r.f <= cfg.ftol * std::max(1.0, std::abs(fprev))) {
      r.pg_norm = pg_norm(r.x, g);
      r.converged = r.pg_norm <= cfg.gtol;
      ++r.iterations;
      break;
    }
  }
  if (r.iterations == cfg.max_iter) r.pg_norm = pg_norm(r.x, g);
  return r;
}

}  // namespace levyot::opt
