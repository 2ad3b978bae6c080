#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "levyot/error.hpp"
#include "levyot/quadrature.hpp"
#include "levyot/rng.hpp"
#include "levyot/simulate.hpp"
#include "levyot/transport/grid.hpp"

namespace levyot {

/// Initial or terminal law: a point mass, a Gaussian, or weights on points.
class Marginal {
public:
  enum class Kind { PointMass, Gaussian, GridDensity };

  static Marginal point_mass(double x) {
    require(std::isfinite(x), "point mass location must be finite");
    Marginal m(Kind::PointMass);
    m.a_ = x;
    return m;
  }
  static Marginal gaussian(double mean, double var) {
    require(std::isfinite(mean) && std::isfinite(var) && var > 0.0, "gaussian marginal needs finite mean and variance > 0");
    Marginal m(Kind::Gaussian);
    m.a_ = mean;
    m.b_ = var;
    return m;
  }
  static Marginal grid_density(std::vector<double> points, std::vector<double> weights) {
    require(!points.empty() && points.size() == weights.size(), "grid density needs matching points and weights");
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      require(std::isfinite(points[i]), "grid density points must be finite");
      require(weights[i] >= 0.0, "grid density weights must be nonnegative");
      total += weights[i];
    }
    require(std::abs(total - 1.0) <= 1e-12, "grid density weights must sum to 1 (got " + std::to_string(total) + ")");
    std::vector<std::size_t> order(points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
    Marginal m(Kind::GridDensity);
    for (std::size_t i : order) {
      m.pts_.push_back(points[i]);
      m.wts_.push_back(weights[i]);
    }
    return m;
  }
  /// Law of drift + jump * N with N ~ Poisson(rate), tail below 1e-16 dropped and renormalized.
  static Marginal poisson_lattice(double rate, double jump, double drift) {
    require(rate > 0.0 && jump != 0.0 && std::isfinite(drift), "poisson lattice needs rate > 0 and jump != 0");
    std::vector<double> pts, wts;
    double total = 0.0;
    const double kmax = rate + 40.0 * std::sqrt(rate) + 40.0;
    for (double k = 0.0; k <= kmax; k += 1.0) {
      const double p = std::exp(k * std::log(rate) - rate - std::lgamma(k + 1.0));
      if (p < 1e-16 && k > rate) break;
      pts.push_back(drift + jump * k);
      wts.push_back(p);
      total += p;
    }
    for (double& w : wts) w /= total;
    double s = 0.0;
    for (double w : wts) s += w;
    wts.back() += 1.0 - s;
    return grid_density(pts, wts);
  }
  /// Compensated Poisson law at time 1 for the triplet (0, 0, rate * delta_jump).
  static Marginal compensated_poisson(double rate, double jump) {
    return poisson_lattice(rate, jump, -rate * std::clamp(jump, -1.0, 1.0));
  }

  Kind kind() const { return kind_; }
  double location() const { return a_; }
  double mean_param() const { return a_; }
  double variance_param() const { return b_; }
  const std::vector<double>& points() const { return pts_; }
  const std::vector<double>& weights() const { return wts_; }

  std::complex<double> cf(double u) const {
    switch (kind_) {
      case Kind::PointMass: return std::exp(std::complex<double>(0.0, u * a_));
      case Kind::Gaussian: return std::exp(std::complex<double>(-0.5 * b_ * u * u, u * a_));
      default: {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < pts_.size(); ++i) acc += wts_[i] * std::exp(std::complex<double>(0.0, u * pts_[i]));
        return acc;
      }
    }
  }

  Cdf cdf() const {
    switch (kind_) {
      case Kind::PointMass: {
        const double a = a_;
        return Cdf{[a](double x) { return x >= a ? 1.0 : 0.0; }, [a](double x) { return x > a ? 1.0 : 0.0; }};
      }
      case Kind::Gaussian: {
        const double m = a_, v = b_;
        return Cdf::continuous([m, v](double x) { return normal_cdf(x, m, v); });
      }
      default: {
        std::vector<double> cum;
        double run = 0.0;
        for (double w : wts_) cum.push_back(std::min(run += w, 1.0));
        auto at = [pts = pts_, cum](double y) {
          const auto it = std::upper_bound(pts.begin(), pts.end(), y);
          return it == pts.begin() ? 0.0 : cum[static_cast<std::size_t>(it - pts.begin()) - 1];
        };
        return Cdf{[at](double x) { return at(x + 1e-9 * (1.0 + std::abs(x))); },
                   [at](double x) { return at(x - 1e-9 * (1.0 + std::abs(x))); }};
      }
    }
  }

  /// Native quadrature: exact for point masses and weighted points, Gauss-Hermite for Gaussians.
  double integrate(const std::function<double(double)>& f) const {
    switch (kind_) {
      case Kind::PointMass: return f(a_);
      case Kind::Gaussian: return quad::normal_expectation(f, a_, b_, 64);
      default: {
        double acc = 0.0;
        for (std::size_t i = 0; i < pts_.size(); ++i) acc += wts_[i] * f(pts_[i]);
        return acc;
      }
    }
  }

  /// w_i = integral of the i-th hat function, mass beyond the grid lumped at the end
  /// nodes, so that sum_i w_i g_i integrates the grid interpolant of g exactly.
  std::vector<double> hat_weights(const Grid1D& g) const {
    std::vector<double> w(g.size(), 0.0);
    auto add_point = [&](double y, double p) {
      const Grid1D::Loc l = g.locate(y);
      w[l.i] += p * (1.0 - l.f);
      if (l.f > 0.0) w[l.i + 1] += p * l.f;
    };
    switch (kind_) {
      case Kind::PointMass: add_point(a_, 1.0); break;
      case Kind::GridDensity:
        for (std::size_t i = 0; i < pts_.size(); ++i) add_point(pts_[i], wts_[i]);
        break;
      case Kind::Gaussian: {
        const double m = a_, s = std::sqrt(b_);
        auto Phi = [&](double x) { return normal_cdf(x, m, b_); };
        auto pdf = [&](double x) {
          const double z = (x - m) / s;
          return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
        };
        w[0] += Phi(g.x(0));
        w[g.M] += 1.0 - Phi(g.x(g.M));
        for (std::size_t i = 0; i < g.M; ++i) {
          const double a = g.x(i), b = g.x(i + 1), h = b - a;
          const double P = Phi(b) - Phi(a);
          const double X = m * P - b_ * (pdf(b) - pdf(a));  // integral of x dN over [a, b]
          w[i] += (b * P - X) / h;
          w[i + 1] += (X - a * P) / h;
        }
        break;
      }
    }
    return w;
  }

  double sample(rng::Stream& s) const {
    switch (kind_) {
      case Kind::PointMass: return a_;
      case Kind::Gaussian: return a_ + std::sqrt(b_) * s.normal();
      default: {
        double u = s.uniform(), run = 0.0;
        for (std::size_t i = 0; i < pts_.size(); ++i)
          if ((run += wts_[i]) >= u) return pts_[i];
        return pts_.back();
      }
    }
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::PointMass: return "point-mass";
      case Kind::Gaussian: return "gaussian";
      default: return "grid-density";
    }
  }

private:
  explicit Marginal(Kind k) : kind_(k) {}
  Kind kind_;
  double a_ = 0.0, b_ = 0.0;
  std::vector<double> pts_, wts_;
};

}  // namespace levyot
