#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "levyot/error.hpp"

namespace levyot {

/// Uniform spatial grid x_0 = lo < ... < x_M = hi; functions on it are
/// piecewise linear inside and constant beyond the ends.
struct Grid1D {
  double lo = -8.0;
  double hi = 8.0;
  std::size_t M = 400;

  void validate() const {
    require(hi > lo, "grid: need lo < hi");
    require(M >= 2, "grid: need at least 2 intervals");
  }
  std::size_t size() const { return M + 1; }
  double h() const { return (hi - lo) / static_cast<double>(M); }
  double x(std::size_t i) const {
    return i == M ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(M);
  }
  std::vector<double> nodes() const {
    std::vector<double> n(size());
    for (std::size_t i = 0; i <= M; ++i) n[i] = x(i);
    return n;
  }

  struct Loc {
    std::size_t i;
    double f;  // value = (1 - f) u[i] + f u[i + 1]
  };
  Loc locate(double z) const {
    if (!(z > lo)) return {0, 0.0};
    if (!(z < hi)) return {M, 0.0};
    const double s = (z - lo) / (hi - lo) * static_cast<double>(M);
    const std::size_t i = std::min(static_cast<std::size_t>(s), M - 1);
    return {i, s - static_cast<double>(i)};
  }
  double interp(const std::vector<double>& u, double z) const {
    const Loc l = locate(z);
    return l.f == 0.0 ? u[l.i] : (1.0 - l.f) * u[l.i] + l.f * u[l.i + 1];
  }
  // u(z) - u[m] without cancellation for constant u
  double interp_diff(const std::vector<double>& u, double z, std::size_t m) const {
    const Loc l = locate(z);
    return l.f == 0.0 ? u[l.i] - u[m] : (1.0 - l.f) * (u[l.i] - u[m]) + l.f * (u[l.i + 1] - u[m]);
  }
};

/// Solves a tridiagonal system in place (lower[0] and upper[n-1] unused).
inline void solve_tridiagonal(const std::vector<double>& lower, const std::vector<double>& diag,
                              const std::vector<double>& upper, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  std::vector<double> cp(n), dp(n);
  cp[0] = upper[0] / diag[0];
  dp[0] = rhs[0] / diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double den = diag[i] - lower[i] * cp[i - 1];
    cp[i] = i + 1 < n ? upper[i] / den : 0.0;
    dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / den;
  }
  rhs[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = dp[i] - cp[i] * rhs[i + 1];
}

}  // namespace levyot
