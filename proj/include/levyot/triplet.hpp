#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "levyot/error.hpp"
#include "levyot/levy_measure.hpp"

namespace levyot {

using Complex = std::complex<double>;

/// Canonical truncation h(x) = x * min(1, 1/|x|): projection onto the closed unit ball.
struct TruncationRule {
  std::size_t dimension = 1;

  Vec apply(const Vec& x) const {
    require(static_cast<std::size_t>(x.size()) == dimension, "truncation: dimension mismatch");
    const double r = x.norm();
    return r <= 1.0 ? x : Vec(x / r);
  }
  static double scalar(double x) { return std::abs(x) <= 1.0 ? x : std::copysign(1.0, x); }
};

inline Vec truncation_apply(const TruncationRule& rule, const Vec& x) { return rule.apply(x); }

namespace detail {
inline Vec truncate(const Vec& x) {
  const double r = x.norm();
  return r <= 1.0 ? x : Vec(x / r);
}
}  // namespace detail

constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdTol = 1e-10;

inline double min_eigenvalue(const Mat& m) {
  if (m.size() == 0) return 0.0;
  const Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Characteristic triplet (b, c, F) with respect to the canonical truncation.
class LevyTriplet {
public:
  LevyTriplet() : LevyTriplet(Vec::Zero(1), Mat::Zero(1, 1), LevyMeasure(1)) {}

  LevyTriplet(Vec b, Mat c, LevyMeasure F) : b_(std::move(b)), c_(std::move(c)), F_(std::move(F)) {
    const auto d = static_cast<Eigen::Index>(F_.dim());
    require(b_.size() == d && c_.rows() == d && c_.cols() == d, "triplet: b, c and F must share the dimension");
    require(b_.allFinite() && c_.allFinite(), "triplet: b and c must be finite");
    require(((c_ - c_.transpose()).cwiseAbs().maxCoeff()) <= kSymmetryTol, "triplet: c must be symmetric");
    require(min_eigenvalue(c_) >= -kPsdTol, "triplet: c must be nonnegative definite");
  }

  static LevyTriplet scalar(double b, double c, LevyMeasure F = LevyMeasure(1)) {
    return LevyTriplet(Vec::Constant(1, b), Mat::Constant(1, 1, c), std::move(F));
  }

  std::size_t dim() const { return F_.dim(); }
  const Vec& b() const { return b_; }
  const Mat& c() const { return c_; }
  const LevyMeasure& F() const { return F_; }

private:
  Vec b_;
  Mat c_;
  LevyMeasure F_;
};

/// |b| + |c|_F + integral of |x|^2 ^ |x| dF.
inline double condition_b_value(const LevyTriplet& t) {
  const double jumps = t.F().integrate<double>([](const Vec& x) {
    const double r = x.norm();
    return std::min(r * r, r);
  });
  return t.b().norm() + t.c().norm() + jumps;
}

/// Integral of |x|^2 over the closed ball of radius delta.
inline double small_jump_second_moment(const LevyMeasure& F, double delta) {
  require(delta > 0.0, "small_jump_second_moment: delta must be positive");
  return F.integrate<double>([](const Vec& x) { return x.squaredNorm(); }, Shell::ball(delta));
}

/// The map u: (b, c, F) -> (b, c + integral of h h^T dF, F).
inline LevyTriplet modified_triplet(const LevyTriplet& t) {
  const Mat corr = t.F().integrate<Mat>(
      [](const Vec& x) -> Mat {
        const Vec h = detail::truncate(x);
        return h * h.transpose();
      },
      Shell::all(), {}, Mat::Zero(t.dim(), t.dim()));
  return LevyTriplet(t.b(), t.c() + corr, t.F());
}

namespace detail {
// e^{is} - 1 - i*(u.h(y)) with s = u.y, written to avoid cancellation.
inline Complex jump_kernel(double s, double uh) {
  const double sh = std::sin(0.5 * s);
  const double re = -2.0 * sh * sh;
  double im;
  if (s == uh && std::abs(s) < 1e-2) {
    const double s2 = s * s;
    im = -s * s2 / 6.0 * (1.0 - s2 / 20.0 * (1.0 - s2 / 42.0));
  } else {
    im = std::sin(s) - uh;
  }
  return {re, im};
}
}  // namespace detail

/// psi(u) = i u.b - u.c.u / 2 + integral of (e^{iu.y} - 1 - i u.h(y)) dF.
inline Complex levy_exponent(const LevyTriplet& t, const Vec& u) {
  require(static_cast<std::size_t>(u.size()) == t.dim(), "levy_exponent: dimension mismatch");
  const Complex jumps = t.F().integrate<Complex>([&u](const Vec& y) {
    const Vec h = detail::truncate(y);
    return detail::jump_kernel(u.dot(y), u.dot(h));
  });
  return Complex(0.0, u.dot(t.b())) - 0.5 * u.dot(t.c() * u) + jumps;
}

inline Complex levy_exponent(const LevyTriplet& t, double u) { return levy_exponent(t, Vec::Constant(1, u)); }

struct TestFunction {
  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
};

/// Generator b.grad f + c:hess f / 2 + jump integral, evaluated at x.
inline double generator_apply(const LevyTriplet& t, const TestFunction& fn, const Vec& x) {
  require(static_cast<std::size_t>(x.size()) == t.dim(), "generator_apply: dimension mismatch");
  const double fx = fn.f(x);
  const Vec g = fn.grad(x);
  const Mat H = fn.hess(x);
  if (!std::isfinite(fx) || !g.allFinite() || !H.allFinite())
    throw NumericalError("generator_apply: non-finite test function data at x");
  const double local = t.b().dot(g) + 0.5 * (t.c().cwiseProduct(H)).sum();
  const double jumps = t.F().integrate<double>([&](const Vec& y) {
    const double fy = fn.f(x + y);
    if (!std::isfinite(fy)) throw NumericalError("generator_apply: non-finite f at a shifted point");
    return fy - fx - g.dot(detail::truncate(y));
  });
  return local + jumps;
}

/// b + integral of (x - h(x)) dF; zero certifies the martingale property.
inline Vec martingale_residual(const LevyTriplet& t) {
  const Vec tail = t.F().integrate<Vec>(
      [](const Vec& x) -> Vec { return x - detail::truncate(x); }, Shell::outside(1.0), {},
      Vec::Zero(t.dim()));
  return t.b() + tail;
}

struct FeatureMapConfig {
  std::size_t m_max = 8;
  std::vector<Vec> u_grid;

  void validate() const {
    require(m_max >= 1, "feature map: m_max must be >= 1");
    for (const Vec& u : u_grid) require(u.norm() > 0.0, "feature map: zero frequency is not allowed");
  }
};

namespace detail {
inline double g2m(double r, std::size_t m) {
  const double lo = 0.5 / static_cast<double>(m), hi = 1.0 / static_cast<double>(m);
  const double ramp = r <= lo ? 0.0 : (r >= hi ? 1.0 : (r - lo) / (hi - lo));
  return std::min(r * r, 1.0) * ramp;
}
}  // namespace detail

/// (integral of g_2m dF)_{m=1..m_max}, then Re/Im of integral of (|x|^2 ^ 1) e^{iu.x} dF per grid frequency.
inline std::vector<double> measure_features(const LevyMeasure& F, const FeatureMapConfig& cfg) {
  cfg.validate();
  for (const Vec& u : cfg.u_grid)
    require(static_cast<std::size_t>(u.size()) == F.dim(), "feature map: frequency has wrong dimension");
  std::vector<double> out;
  out.reserve(cfg.m_max + 2 * cfg.u_grid.size());
  for (std::size_t m = 1; m <= cfg.m_max; ++m) {
    const double br[2] = {0.5 / static_cast<double>(m), 1.0 / static_cast<double>(m)};
    out.push_back(F.integrate<double>([m](const Vec& x) { return detail::g2m(x.norm(), m); }, Shell::all(), br));
  }
  for (const Vec& u : cfg.u_grid) {
    const Complex v = F.integrate<Complex>([&u](const Vec& x) {
      return std::min(x.squaredNorm(), 1.0) * std::exp(Complex(0.0, u.dot(x)));
    });
    out.push_back(v.real());
    out.push_back(v.imag());
  }
  return out;
}

}  // namespace levyot
