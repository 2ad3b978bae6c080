#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "levyot/error.hpp"

namespace levyot::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// Newton iteration on P_n, nodes on [-1, 1].
inline Rule compute_legendre(std::size_t n) {
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / static_cast<double>(j);
      }
      pp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15) break;
    }
    // recompute derivative at the converged node
    double p1 = 1.0, p2 = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
      const double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / static_cast<double>(j);
    }
    pp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
    r.nodes[i] = -z;
    r.nodes[n - 1 - i] = z;
    r.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    r.weights[n - 1 - i] = r.weights[i];
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

// Physicists' Hermite, weight exp(-x^2); recurrence on orthonormal polynomials.
inline Rule compute_hermite(std::size_t n) {
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  double z = 0.0;
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double nn = static_cast<double>(n);
    if (i == 0)
      z = std::sqrt(2.0 * nn + 1.0) - 1.85575 * std::pow(2.0 * nn + 1.0, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(nn, 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * r.nodes[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * r.nodes[1];
    else
      z = 2.0 * z - r.nodes[i - 2];
    double pp = 0.0;
    for (int it = 0; it < 200; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * nn) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-14) break;
    }
    r.nodes[i] = z;
    r.nodes[n - 1 - i] = -z;
    r.weights[i] = 2.0 / (pp * pp);
    r.weights[n - 1 - i] = r.weights[i];
  }
  return r;
}

template <class F>
const Rule& cached(std::map<std::size_t, Rule>& cache, std::size_t n, F make) {
  static std::mutex mu;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make(n)).first;
  return it->second;
}

}  // namespace detail

/// Gauss-Legendre rule on [-1, 1]; cached per node count, references stay valid.
inline const Rule& gauss_legendre(std::size_t n) {
  require(n >= 1, "Gauss-Legendre rule needs at least one node");
  static std::map<std::size_t, Rule> cache;
  return detail::cached(cache, n, detail::compute_legendre);
}

/// Gauss-Hermite rule for the weight exp(-x^2).
inline const Rule& gauss_hermite(std::size_t n) {
  require(n >= 1, "Gauss-Hermite rule needs at least one node");
  static std::map<std::size_t, Rule> cache;
  return detail::cached(cache, n, detail::compute_hermite);
}

/// Nodes/weights of an n-point Gauss-Legendre rule mapped onto [a, b].
inline Rule legendre_on(double a, double b, std::size_t n) {
  const Rule& ref = gauss_legendre(n);
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < n; ++i) {
    r.nodes[i] = mid + half * ref.nodes[i];
    r.weights[i] = half * ref.weights[i];
  }
  return r;
}

/// E[f(Z)] for Z ~ N(mean, var) by Gauss-Hermite.
template <class F>
double normal_expectation(F&& f, double mean, double var, std::size_t n = 64) {
  if (var <= 0.0) return f(mean);
  const Rule& r = gauss_hermite(n);
  const double s = std::sqrt(2.0 * var);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * f(mean + s * r.nodes[i]);
  return acc / std::sqrt(std::numbers::pi);
}

}  // namespace levyot::quad
