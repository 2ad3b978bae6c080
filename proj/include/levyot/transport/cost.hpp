#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "levyot/error.hpp"
#include "levyot/rng.hpp"
#include "levyot/theta_family.hpp"

namespace levyot {

/// Running cost L(t, x, p) with p the family parameters.
struct CostFunction {
  std::function<double(double, double, std::span<const double>)> eval;
  bool declared_convex = true;
  std::string source;

  double operator()(double t, double x, std::span<const double> p) const { return eval(t, x, p); }
};

struct CostReport {
  bool nonnegative = true;
  bool convex = true;  // only checked when declared convex
  bool pass = true;
  std::vector<std::pair<double, double>> moduli;  // (epsilon, sampled sup of |L(s) - L(t)| / (1 + L(t)))
  std::string failure;
};

constexpr double kCostStateRange = 10.0;  // states are sampled from [-10, 10]

inline CostReport validate_cost(const CostFunction& L, const ThetaFamily& fam, std::size_t samples,
                                std::uint64_t seed = 5) {
  require(samples >= 1, "validate_cost: need at least one sample");
  require(static_cast<bool>(L.eval), "validate_cost: cost has no evaluator");
  CostReport rep;
  rng::Stream s(seed, 2);
  auto x_draw = [&] { return kCostStateRange * (2.0 * s.uniform() - 1.0); };
  auto value = [&](double t, double x, std::span<const double> p) {
    const double v = L(t, x, p);
    if (!std::isfinite(v)) throw NumericalError("cost evaluator returned a non-finite value");
    return v;
  };
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = s.uniform(), x = x_draw();
    const std::vector<double> p = fam.random_point(s), q = fam.random_point(s);
    const double lp = value(t, x, p);
    if (lp < 0.0 && rep.nonnegative) {
      rep.nonnegative = false;
      rep.failure = "cost is negative at a sampled point (" + std::to_string(lp) + ")";
    }
    if (L.declared_convex) {
      std::vector<double> mid(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) mid[i] = 0.5 * (p[i] + q[i]);
      const double lq = value(t, x, q), lm = value(t, x, mid);
      if (lm > 0.5 * (lp + lq) + 1e-8 && rep.convex) {
        rep.convex = false;
        if (rep.failure.empty()) rep.failure = "midpoint convexity check failed";
      }
    }
  }
  for (double eps : {0.1, 0.01}) {
    double sup = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
      const double t = s.uniform(), x = x_draw();
      const double u = std::clamp(t + eps * (2.0 * s.uniform() - 1.0), 0.0, 1.0);
      const std::vector<double> p = fam.random_point(s);
      const double lt = value(t, x, p);
      sup = std::max(sup, std::abs(value(u, x, p) - lt) / (1.0 + std::abs(lt)));
    }
    rep.moduli.emplace_back(eps, sup);
  }
  rep.pass = rep.nonnegative && rep.convex;
  return rep;
}

/// True when sampled costs do not change with the state.
inline bool is_state_independent(const CostFunction& L, const ThetaFamily& fam, std::size_t samples = 64,
                                 std::uint64_t seed = 6) {
  rng::Stream s(seed, 3);
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = s.uniform();
    const std::vector<double> p = fam.random_point(s);
    const double a = L(t, kCostStateRange * (2.0 * s.uniform() - 1.0), p);
    const double b = L(t, kCostStateRange * (2.0 * s.uniform() - 1.0), p);
    if (std::abs(a - b) > 1e-14 * (1.0 + std::abs(a))) return false;
  }
  return true;
}

}  // namespace levyot
