#pragma once

// Backward dynamic programming for v_t + inf_p { L^p v + L(t, x, p) } = 0 on a
// uniform grid. Per step: drift and compensator by a semi-Lagrangian shift,
// jumps explicitly (exact Poisson mixture for at most three atoms, Euler
// otherwise), diffusion implicitly; the implicit coupling with the control is
// resolved by policy iteration.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "levyot/error.hpp"
#include "levyot/transport/control.hpp"
#include "levyot/transport/grid.hpp"
#include "levyot/transport/instance.hpp"

namespace levyot {

struct GridConfig {
  Grid1D grid;
  std::size_t K = 100;
  std::size_t scan_points = 16;
  std::size_t max_policy_iter = 50;
  double golden_tol = 1e-12;  // line-search tolerance relative to the axis width
  bool record_operators = false;

  void validate() const {
    grid.validate();
    require(K >= 1, "HJB: need at least one time step");
    require(scan_points >= 2, "HJB: scan needs at least 2 points");
  }
};

/// One backward step w = A^{-1} (J u + dt L) at the chosen policy.
struct StepOperator {
  std::vector<double> alpha;  // A = I - alpha * (second difference), alpha = c dt / (2 h^2)
  std::vector<std::size_t> row_ptr, col;
  std::vector<double> wt;     // rows of J
};

struct ValueGrid {
  Grid1D grid;
  std::vector<double> t;
  std::vector<std::vector<double>> v;      // v[k][m]
  std::size_t P = 0;
  std::vector<std::vector<double>> theta;  // theta[k][m * P + i], used on [t_k, t_{k+1})
  std::vector<StepOperator> ops;           // filled when requested

  const std::vector<double>& initial() const { return v.front(); }
  std::span<const double> control(std::size_t k, std::size_t m) const {
    return std::span<const double>(theta[k]).subspan(m * P, P);
  }
};

class HjbSolver {
public:
  HjbSolver(const TransportInstance& inst, GridConfig cfg) : inst_(&inst), cfg_(std::move(cfg)), model_(inst.fam) {
    cfg_.validate();
    require(inst.fam.dim() == 1, "HJB: family must be one-dimensional");
    const double dt = 1.0 / static_cast<double>(cfg_.K);
    if (model_.affine() && model_.fixed_atoms() > 3) {
      const double r = model_.max_rate();
      if (r * dt > 1.0)
        throw CflError("explicit jump step violates dt * rate <= 1 (rate " + std::to_string(r) + ")", 0.9 / r);
    }
  }

  const GridConfig& config() const { return cfg_; }
  const Grid1D& grid() const { return cfg_.grid; }
  const ControlModel& model() const { return model_; }

  ValueGrid solve(const std::vector<double>& lambda1) const {
    const Grid1D& g = cfg_.grid;
    const std::size_t N = g.size(), K = cfg_.K, P = model_.n_params();
    require(lambda1.size() == N, "HJB: terminal function has wrong size");
    for (double v : lambda1)
      if (!std::isfinite(v)) throw ValidationError("HJB: terminal function must be finite (bounded) on the grid");
    const double dt = 1.0 / static_cast<double>(K), h = g.h();

    ValueGrid out;
    out.grid = g;
    out.P = P;
    for (std::size_t k = 0; k <= K; ++k) out.t.push_back(k == K ? 1.0 : dt * static_cast<double>(k));
    out.v.assign(K + 1, {});
    out.v[K] = lambda1;
    out.theta.assign(K, {});
    if (cfg_.record_operators) out.ops.assign(K, {});

    Work ws;
    ws.theta.resize(N * P);
    const std::vector<double> ctr = inst_->fam.center();
    for (std::size_t m = 0; m < N; ++m) std::copy(ctr.begin(), ctr.end(), ws.theta.begin() + m * P);
    std::vector<double> lower(N), diag(N), upper(N), delta(N), d2w(N, 0.0), jd(N), cost(N), alpha(N, 0.0);

    for (std::size_t k = K; k-- > 0;) {
      const std::vector<double>& u = out.v[k + 1];
      const double tmid = out.t[k] + 0.5 * dt;
      auto evaluate_policy = [&] {
        for (std::size_t m = 0; m < N; ++m) {
          const std::span<const double> p(&ws.theta[m * P], P);
          model_.law(p, ws.law);
          jd[m] = jump_drift_diff(ws, m, u, dt, nullptr);
          cost[m] = dt * inst_->L(tmid, g.x(m), p);
          alpha[m] = (m == 0 || m + 1 == N) ? 0.0 : 0.5 * ws.law.c * dt / (h * h);
          const double d2u = (m == 0 || m + 1 == N) ? 0.0 : (u[m + 1] - u[m]) + (u[m - 1] - u[m]);
          delta[m] = jd[m] + cost[m] + alpha[m] * d2u;
          lower[m] = -alpha[m];
          upper[m] = -alpha[m];
          diag[m] = 1.0 + 2.0 * alpha[m];
        }
        solve_tridiagonal(lower, diag, upper, delta);
        for (std::size_t m = 1; m + 1 < N; ++m) {
          const double wm = u[m] + delta[m];
          d2w[m] = ((u[m + 1] + delta[m + 1] - wm) + (u[m - 1] + delta[m - 1] - wm)) / (h * h);
        }
      };

      if (model_.diffusion_free()) {
        for (std::size_t m = 0; m < N; ++m) delta[m] = minimize_node(ws, m, tmid, u, 0.0, dt);
        std::fill(alpha.begin(), alpha.end(), 0.0);
      } else {
        evaluate_policy();  // warm start from the later step's policy
        // stop once the value no longer moves; argmins are only resolved to the line tolerance
        for (std::size_t it = 0; it < cfg_.max_policy_iter; ++it) {
          bool changed = false;
          for (std::size_t m = 0; m < N; ++m) {
            ws.prev.assign(ws.theta.begin() + m * P, ws.theta.begin() + (m + 1) * P);
            minimize_node(ws, m, tmid, u, d2w[m], dt, it == 0);
            if (!std::equal(ws.prev.begin(), ws.prev.end(), ws.theta.begin() + m * P)) changed = true;
          }
          if (!changed) break;
          ws.last = delta;
          evaluate_policy();
          double move = 0.0, scale = 0.0;
          for (std::size_t m = 0; m < N; ++m) {
            move = std::max(move, std::abs(delta[m] - ws.last[m]));
            scale = std::max(scale, std::abs(u[m]) + std::abs(delta[m]));
          }
          if (move <= 1e-14 * (1.0 + scale)) break;
        }
      }
      out.v[k].resize(N);
      for (std::size_t m = 0; m < N; ++m) out.v[k][m] = u[m] + delta[m];
      out.theta[k] = ws.theta;

      if (cfg_.record_operators) {
        StepOperator& op = out.ops[k];
        op.alpha = alpha;
        op.row_ptr.assign(1, 0);
        for (std::size_t m = 0; m < N; ++m) {
          model_.law(std::span<const double>(&ws.theta[m * P], P), ws.law);
          ws.rec.clear();
          jump_drift_diff(ws, m, u, dt, &ws.rec);
          for (auto [j, w] : ws.rec) {
            op.col.push_back(j);
            op.wt.push_back(w);
          }
          op.row_ptr.push_back(op.col.size());
        }
      }
    }
    return out;
  }

private:
  struct Work {
    ControlLaw law;
    std::vector<double> theta, prev, trial, last;
    std::vector<std::vector<double>> pmf;
    std::vector<std::pair<std::size_t, double>> rec;
  };

  // Poisson(mean) weights until the tail is below 1e-16.
  static void poisson_pmf(double mean, std::vector<double>& out) {
    out.clear();
    double p = std::exp(-mean), cum = p;
    out.push_back(p);
    for (std::size_t k = 1; cum < 1.0 - 1e-16 && k < 100000; ++k) {
      p *= mean / static_cast<double>(k);
      if (p == 0.0) break;
      out.push_back(p);
      cum += p;
    }
  }

  /// E[u(x_m + b_eff dt + jumps over dt)] - u_m; rows of J are appended to rec when given.
  double jump_drift_diff(Work& ws, std::size_t m, const std::vector<double>& u, double dt,
                         std::vector<std::pair<std::size_t, double>>* rec) const {
    const Grid1D& g = cfg_.grid;
    const ControlLaw& law = ws.law;
    const double z0 = g.x(m) + law.b_eff * dt;
    auto add = [&](double z, double p) {
      if (!rec) return;
      const Grid1D::Loc l = g.locate(z);
      rec->emplace_back(l.i, p * (1.0 - l.f));
      if (l.f > 0.0) rec->emplace_back(l.i + 1, p * l.f);
    };
    auto diff = [&](double z) { return z == g.x(m) ? 0.0 : g.interp_diff(u, z, m); };
    const double rate = law.rate();
    if (rate == 0.0) {
      if (rec) {
        if (z0 == g.x(m)) rec->emplace_back(m, 1.0);
        else add(z0, 1.0);
      }
      return diff(z0);
    }
    const std::size_t A = law.y.size();
    if (A <= 3) {
      ws.pmf.resize(A);
      for (std::size_t j = 0; j < A; ++j) poisson_pmf(law.w[j] * dt, ws.pmf[j]);
      double acc = 0.0, total = 0.0;
      const std::size_t rec_start = rec ? rec->size() : 0;
      // nested sum over jump counts; products below 1e-18 are dropped, the rest renormalized
      auto sum = [&](auto&& self, std::size_t j, double p, double shift) -> void {
        if (j == A) {
          acc += p * diff(z0 + shift);
          total += p;
          add(z0 + shift, p);
          return;
        }
        const std::vector<double>& pm = ws.pmf[j];
        const double mean = law.w[j] * dt;
        for (std::size_t k = 0; k < pm.size(); ++k) {
          const double q = p * pm[k];
          if (q < 1e-18) {
            if (static_cast<double>(k) > mean) break;
            continue;
          }
          self(self, j + 1, q, shift + static_cast<double>(k) * law.y[j]);
        }
      };
      sum(sum, 0, 1.0, 0.0);
      if (rec)
        for (std::size_t r = rec_start; r < rec->size(); ++r) (*rec)[r].second /= total;
      return acc / total;
    }
    if (rate * dt > 1.0) throw CflError("explicit jump step violates dt * rate <= 1", 0.9 / rate);
    double acc = (1.0 - rate * dt) * diff(z0);
    add(z0, 1.0 - rate * dt);
    for (std::size_t j = 0; j < A; ++j) {
      acc += law.w[j] * dt * diff(z0 + law.y[j]);
      add(z0 + law.y[j], law.w[j] * dt);
    }
    return acc;
  }

  double q_value(Work& ws, std::size_t m, double tmid, const std::vector<double>& u, double d2w, double dt,
                 std::span<const double> p) const {
    model_.law(p, ws.law);
    return jump_drift_diff(ws, m, u, dt, nullptr) + 0.5 * ws.law.c * dt * d2w + dt * inst_->L(tmid, cfg_.grid.x(m), p);
  }

  /// Coordinate-wise minimization of the node Hamiltonian, warm-started at ws.theta; returns the minimum.
  /// Without the scan only a neighbourhood of the warm start is searched.
  double minimize_node(Work& ws, std::size_t m, double tmid, const std::vector<double>& u, double d2w, double dt,
                       bool scan = true) const {
    const std::size_t P = model_.n_params();
    std::vector<double>& th = ws.trial;
    th.assign(ws.theta.begin() + m * P, ws.theta.begin() + (m + 1) * P);
    const double x = cfg_.grid.x(m);
    double best = q_value(ws, m, tmid, u, d2w, dt, th);
    const double start = best;
    const std::size_t sweeps = P == 1 ? 1 : 10;
    for (std::size_t s = 0; s < sweeps; ++s) {
      const double before = best;
      for (std::size_t i = 0; i < P; ++i) {
        const double lo = inst_->fam.box()[i].lo, hi = inst_->fam.box()[i].hi;
        if (hi == lo) continue;
        auto f = [&](double v) {
          th[i] = v;
          return q_value(ws, m, tmid, u, d2w, dt, th);
        };
        const double keep = th[i];
        double arg = keep, val = best;
        if (model_.c_only(i)) {
          // Q(v) = const + a v + dt L(v) with L quadratic in v
          const double L0 = eval_cost(tmid, x, th, i, lo), L1 = eval_cost(tmid, x, th, i, 0.5 * (lo + hi));
          const double L2 = eval_cost(tmid, x, th, i, hi), L3 = eval_cost(tmid, x, th, i, lo + 0.3 * (hi - lo));
          const double hh = 0.5 * (hi - lo);
          const double gam = (L0 - 2.0 * L1 + L2) / (2.0 * hh * hh);
          const double beta = (L2 - L0) / (2.0 * hh);  // slope at the midpoint
          const double mid = 0.5 * (lo + hi), r = lo + 0.3 * (hi - lo) - mid;
          const bool is_quad = std::abs(L1 + beta * r + gam * r * r - L3) <= 1e-9 * (1.0 + std::abs(L3));
          if (is_quad) {
            const double a = 0.5 * model_.c_coef(i) * dt * d2w;
            double v;
            if (gam > 0.0) {
              v = std::clamp(mid - (a / dt + beta) / (2.0 * gam), lo, hi);
              // coefficients carry rounding; a stationary point this close to a face is the face
              if (v - lo <= 1e-12 * (hi - lo)) v = lo;
              if (hi - v <= 1e-12 * (hi - lo)) v = hi;
            } else {
              v = f(lo) <= f(hi) ? lo : hi;
            }
            const double fv = f(v);
            if (fv <= val) {
              arg = v;
              val = fv;
            }
            th[i] = arg;
            best = val;
            continue;
          }
        }
        const std::size_t S = cfg_.scan_points;
        for (std::size_t j = 0; scan && j <= S; ++j) {
          const double v = j == S ? hi : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(S);
          const double fv = f(v);
          if (fv < val) {
            val = fv;
            arg = v;
          }
        }
        // Brent refinement (golden section with parabolic steps) around the best point
        const double cell = (hi - lo) / static_cast<double>(S);
        const double xmin = brent(f, std::max(lo, arg - cell), std::min(hi, arg + cell), arg, val,
                                  cfg_.golden_tol * (hi - lo), val);
        arg = xmin;
        th[i] = arg;
        best = val;
      }
      if (!(best < before - 1e-15 * (1.0 + std::abs(before)))) break;
    }
    // keep the incumbent unless the improvement is above rounding; policy iteration can then terminate
    if (!(best < start - 1e-14 * (1.0 + std::abs(start)))) return start;
    std::copy(th.begin(), th.end(), ws.theta.begin() + m * P);
    return best;
  }

  // Minimizes f on [a, b] starting from x with f(x) = fx; returns the argmin and writes its value.
  template <class F>
  static double brent(F& f, double a, double b, double x, double fx, double tol, double& fmin) {
    constexpr double cg = 0.3819660112501051;
    double w = x, v = x, fw = fx, fv = fx, d = 0.0, e = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double m = 0.5 * (a + b);
      const double tol1 = tol + 1e-9 * std::abs(x), tol2 = 2.0 * tol1;
      if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;
      bool golden = true;
      if (std::abs(e) > tol1) {
        const double r = (x - w) * (fx - fv);
        double q = (x - v) * (fx - fw);
        double p = (x - v) * q - (x - w) * r;
        q = 2.0 * (q - r);
        if (q > 0.0) p = -p;
        q = std::abs(q);
        const double etemp = e;
        e = d;
        if (!(std::abs(p) >= std::abs(0.5 * q * etemp) || p <= q * (a - x) || p >= q * (b - x))) {
          d = p / q;
          const double u = x + d;
          if (u - a < tol2 || b - u < tol2) d = std::copysign(tol1, m - x);
          golden = false;
        }
      }
      if (golden) {
        e = x >= m ? a - x : b - x;
        d = cg * e;
      }
      const double u = std::clamp(std::abs(d) >= tol1 ? x + d : x + std::copysign(tol1, d), a, b);
      const double fu = f(u);
      if (fu <= fx) {
        (u >= x ? a : b) = x;
        v = w; fv = fw;
        w = x; fw = fx;
        x = u; fx = fu;
      } else {
        (u < x ? a : b) = u;
        if (fu <= fw || w == x) {
          v = w; fv = fw;
          w = u; fw = fu;
        } else if (fu <= fv || v == x || v == w) {
          v = u; fv = fu;
        }
      }
    }
    fmin = fx;
    return x;
  }

  double eval_cost(double t, double x, std::vector<double>& th, std::size_t i, double v) const {
    const double keep = th[i];
    th[i] = v;
    const double r = inst_->L(t, x, th);
    th[i] = keep;
    return r;
  }

  const TransportInstance* inst_;
  GridConfig cfg_;
  ControlModel model_;
};

inline ValueGrid solve_hjb(const TransportInstance& inst, const std::vector<double>& lambda1, const GridConfig& cfg) {
  return HjbSolver(inst, cfg).solve(lambda1);
}

inline ValueGrid solve_hjb(const TransportInstance& inst, const std::function<double(double)>& lambda1,
                           const GridConfig& cfg) {
  std::vector<double> l;
  for (double x : cfg.grid.nodes()) l.push_back(lambda1(x));
  return solve_hjb(inst, l, cfg);
}

}  // namespace levyot
