#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "levyot/error.hpp"
#include "levyot/quadrature.hpp"

namespace levyot {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Atom {
  Vec x;
  double w;
};

// One-dimensional density on [lo, hi]; the interval may touch 0 but not contain it.
struct DensityPiece {
  double lo = 0.0;
  double hi = 0.0;
  std::function<double(double)> density;
  std::size_t nodes = 64;
  std::string source;  // expression text when built from a document
};

// Jump-size window r_lo < |x| <= r_hi.
struct Shell {
  double r_lo = -1.0;
  double r_hi = std::numeric_limits<double>::infinity();

  static Shell all() { return {}; }
  static Shell ball(double r) { return {-1.0, r}; }
  static Shell outside(double r) { return {r, std::numeric_limits<double>::infinity()}; }
  bool contains(double r) const { return r > r_lo && r <= r_hi; }
};

class LevyMeasure {
public:
  static constexpr double kDefaultMassCap = 1e8;

  explicit LevyMeasure(std::size_t dim = 1) : dim_(dim) { require(dim >= 1, "Levy measure dimension must be >= 1"); }

  static LevyMeasure zero(std::size_t dim = 1) { return LevyMeasure(dim); }
  static LevyMeasure dirac(double x, double w) {
    LevyMeasure m(1);
    m.add_atom(Vec::Constant(1, x), w);
    return m;
  }

  /// Zero weights are dropped; the stored atoms always carry positive mass.
  LevyMeasure& add_atom(Vec x, double w) {
    require(static_cast<std::size_t>(x.size()) == dim_, "atom location has wrong dimension");
    require(std::isfinite(w) && w >= 0.0, "atom weight must be finite and nonnegative");
    require(x.allFinite(), "atom location must be finite");
    if (w == 0.0) return *this;
    require(x.norm() > 0.0, "Levy measure cannot have an atom at 0");
    atoms_.push_back({std::move(x), w});
    return *this;
  }

  LevyMeasure& add_piece(DensityPiece p, double mass_cap = kDefaultMassCap) {
    require(dim_ == 1, "density pieces are supported in dimension 1 only");
    require(p.lo < p.hi, "density piece needs lo < hi");
    require(!(p.lo < 0.0 && p.hi > 0.0), "density piece must not contain 0 in its interior");
    require(p.nodes >= 8, "density piece needs at least 8 quadrature nodes");
    require(static_cast<bool>(p.density), "density piece has no evaluator");
    const std::size_t idx = pieces_.size();
    pieces_.push_back(std::move(p));
    const DensityPiece& q = pieces_.back();
    try {
      check_piece(q, idx, mass_cap);
    } catch (...) {
      pieces_.pop_back();
      throw;
    }
    return *this;
  }

  std::size_t dim() const { return dim_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<DensityPiece>& pieces() const { return pieces_; }
  bool empty() const { return atoms_.empty() && pieces_.empty(); }

  /// Integral of f over the shell. Density pieces are split at |x| = 1 and at
  /// the extra radii in `breaks` so kinked integrands keep Gauss-Legendre accuracy.
  template <class T, class F>
  T integrate(F&& f, Shell shell = Shell::all(), std::span<const double> breaks = {}, T init = T{}) const {
    T acc = std::move(init);
    for (const Atom& a : atoms_)
      if (shell.contains(a.x.norm())) acc += a.w * f(a.x);
    if (pieces_.empty()) return acc;
    Vec x(1);
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
      const DensityPiece& p = pieces_[k];
      for (auto [a, b] : sub_intervals(p, shell, breaks)) {
        const quad::Rule r = quad::legendre_on(a, b, p.nodes);
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
          const double d = p.density(r.nodes[i]);
          if (!std::isfinite(d)) throw QuadratureError("non-finite density value", k);
          x[0] = r.nodes[i];
          acc += (r.weights[i] * d) * f(x);
        }
      }
    }
    return acc;
  }

  /// Atoms in the shell plus one atom per quadrature node of every piece.
  std::vector<Atom> discretize(Shell shell = Shell::all(), std::span<const double> breaks = {}) const {
    std::vector<Atom> out;
    for (const Atom& a : atoms_)
      if (shell.contains(a.x.norm())) out.push_back(a);
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
      const DensityPiece& p = pieces_[k];
      for (auto [a, b] : sub_intervals(p, shell, breaks)) {
        const quad::Rule r = quad::legendre_on(a, b, p.nodes);
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
          const double d = p.density(r.nodes[i]);
          if (!std::isfinite(d)) throw QuadratureError("non-finite density value", k);
          if (d > 0.0 && r.nodes[i] != 0.0) out.push_back({Vec::Constant(1, r.nodes[i]), r.weights[i] * d});
        }
      }
    }
    return out;
  }

  /// alpha * this + beta * other, alpha, beta >= 0.
  LevyMeasure combined(double alpha, const LevyMeasure& other, double beta) const {
    require(other.dim_ == dim_, "cannot combine measures of different dimension");
    require(alpha >= 0.0 && beta >= 0.0, "measure combination needs nonnegative coefficients");
    LevyMeasure out(dim_);
    for (const Atom& a : atoms_) out.add_atom(a.x, alpha * a.w);
    for (const Atom& a : other.atoms_) out.add_atom(a.x, beta * a.w);
    auto scale_pieces = [&out](const std::vector<DensityPiece>& ps, double s) {
      if (s == 0.0) return;
      for (DensityPiece p : ps) {
        auto d = p.density;
        p.density = [d, s](double x) { return s * d(x); };
        out.pieces_.push_back(std::move(p));
      }
    };
    scale_pieces(pieces_, alpha);
    scale_pieces(other.pieces_, beta);
    return out;
  }

private:
  static std::vector<std::pair<double, double>> sub_intervals(const DensityPiece& p, Shell shell,
                                                              std::span<const double> breaks) {
    // signed window: [-r_hi, -r_lo] and [r_lo, r_hi], with r_lo clipped at 0
    const double rl = std::max(shell.r_lo, 0.0), rh = shell.r_hi;
    std::vector<std::pair<double, double>> windows;
    auto clip = [&](double a, double b) {
      const double lo = std::max(a, p.lo), hi = std::min(b, p.hi);
      if (lo < hi) windows.emplace_back(lo, hi);
    };
    clip(-rh, -rl);
    clip(rl, rh);
    std::vector<double> cuts{1.0};
    cuts.insert(cuts.end(), breaks.begin(), breaks.end());
    std::vector<std::pair<double, double>> out;
    for (auto [lo, hi] : windows) {
      std::vector<double> pts{lo, hi};
      for (double c : cuts) {
        if (c > 0.0 && lo < c && c < hi) pts.push_back(c);
        if (c > 0.0 && lo < -c && -c < hi) pts.push_back(-c);
      }
      std::sort(pts.begin(), pts.end());
      for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        if (pts[i] < pts[i + 1]) out.emplace_back(pts[i], pts[i + 1]);
    }
    return out;
  }

  // Finite nonnegative density; pieces touching 0 must have a convergent,
  // capped integral of |x|^2 ^ 1.
  void check_piece(const DensityPiece& p, std::size_t idx, double cap) const {
    auto mass = [&](std::size_t n) {
      double acc = 0.0;
      const quad::Rule r = quad::legendre_on(p.lo, p.hi, n);
      for (std::size_t i = 0; i < n; ++i) {
        const double d = p.density(r.nodes[i]);
        if (!std::isfinite(d)) throw QuadratureError("non-finite density value", idx);
        if (d < 0.0) throw ValidationError("density piece " + std::to_string(idx) + " is negative");
        const double x2 = r.nodes[i] * r.nodes[i];
        acc += r.weights[i] * d * std::min(x2, 1.0);
      }
      return acc;
    };
    const double m1 = mass(p.nodes);
    if (p.lo != 0.0 && p.hi != 0.0) return;
    const double m2 = mass(2 * p.nodes);
    if (!(m2 <= cap) || std::abs(m2 - m1) > 0.05 * std::max(m2, 1e-300))
      throw QuadratureError("integral of |x|^2 ^ 1 near 0 is not finite within the cap", idx);
  }

  std::size_t dim_;
  std::vector<Atom> atoms_;
  std::vector<DensityPiece> pieces_;
};

}  // namespace levyot
