#pragma once

// Fast evaluation of p -> (effective drift, diffusion, jump atoms) for the
// HJB solver. Families whose characteristics are affine in p over fixed atom
// locations are detected by sampling and evaluated without building triplets.

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "levyot/rng.hpp"
#include "levyot/theta_family.hpp"

namespace levyot {

struct ControlLaw {
  double b_eff = 0.0;  // b - sum w h(y): drift of the compensated generator
  double c = 0.0;
  std::vector<double> y, w;
  double rate() const {
    double r = 0.0;
    for (double v : w) r += v;
    return r;
  }
};

class ControlModel {
public:
  explicit ControlModel(const ThetaFamily& fam) : fam_(&fam) {
    P_ = fam.n_params();
    detect();
  }

  std::size_t n_params() const { return P_; }
  bool affine() const { return affine_; }
  bool diffusion_free() const { return affine_ && c0_ == 0.0 && std::all_of(cc_.begin(), cc_.end(), [](double v) { return v == 0.0; }); }
  /// Coordinate i moves only the diffusion coefficient.
  bool c_only(std::size_t i) const {
    if (!affine_ || bc_[i] != 0.0) return false;
    for (std::size_t j = 0; j < locs_.size(); ++j)
      if (wc_[j * P_ + i] != 0.0) return false;
    return true;
  }
  double c_coef(std::size_t i) const { return cc_[i]; }
  /// Number of atoms in every law (affine) or 0 when it varies.
  std::size_t fixed_atoms() const { return affine_ ? locs_.size() : 0; }

  void law(std::span<const double> p, ControlLaw& out) const {
    if (affine_) {
      double b = b0_, c = c0_;
      for (std::size_t i = 0; i < P_; ++i) {
        b += bc_[i] * p[i];
        c += cc_[i] * p[i];
      }
      out.y = locs_;
      out.w.resize(locs_.size());
      for (std::size_t j = 0; j < locs_.size(); ++j) {
        double w = w0_[j];
        for (std::size_t i = 0; i < P_; ++i) w += wc_[j * P_ + i] * p[i];
        out.w[j] = std::max(w, 0.0);
        b -= out.w[j] * std::clamp(locs_[j], -1.0, 1.0);
      }
      out.b_eff = b;
      out.c = std::max(c, 0.0);
      return;
    }
    const LevyTriplet t = fam_->evaluate(p);
    from_triplet(t, out);
  }

  static void from_triplet(const LevyTriplet& t, ControlLaw& out) {
    out.y.clear();
    out.w.clear();
    out.b_eff = t.b()[0];
    out.c = t.c()(0, 0);
    for (const Atom& a : t.F().discretize()) {
      out.y.push_back(a.x[0]);
      out.w.push_back(a.w);
      out.b_eff -= a.w * std::clamp(a.x[0], -1.0, 1.0);
    }
  }

  /// Largest total jump rate over the box corners (exact for affine families).
  double max_rate() const {
    double r = 0.0;
    ControlLaw l;
    const std::size_t res = affine_ ? 2 : 5;
    fam_->for_each_grid_point(res, [&](std::span<const double> p) {
      law(p, l);
      r = std::max(r, l.rate());
    });
    return r;
  }

private:
  struct Sample {
    double b, c;
    std::map<double, double> atoms;
  };

  Sample sample(std::span<const double> p) const {
    const LevyTriplet t = fam_->evaluate(p);
    Sample s{t.b()[0], t.c()(0, 0), {}};
    for (const Atom& a : t.F().discretize()) s.atoms[a.x[0]] += a.w;
    return s;
  }

  void detect() {
    if (fam_->dim() != 1) return;
    std::vector<double> ctr = fam_->center();
    const Sample base = sample(ctr);
    std::vector<Sample> moved;
    std::vector<double> step(P_);
    std::map<double, double> all_locs;
    for (const auto& [x, w] : base.atoms) all_locs[x] = 0.0;
    for (std::size_t i = 0; i < P_; ++i) {
      step[i] = 0.25 * (fam_->box()[i].hi - fam_->box()[i].lo);
      std::vector<double> q = ctr;
      q[i] += step[i];
      moved.push_back(sample(q));
      for (const auto& [x, w] : moved.back().atoms) all_locs[x] = 0.0;
    }
    for (const auto& [x, w] : all_locs) locs_.push_back(x);
    auto weight = [](const Sample& s, double x) {
      const auto it = s.atoms.find(x);
      return it == s.atoms.end() ? 0.0 : it->second;
    };
    bc_.assign(P_, 0.0);
    cc_.assign(P_, 0.0);
    wc_.assign(locs_.size() * P_, 0.0);
    w0_.assign(locs_.size(), 0.0);
    for (std::size_t i = 0; i < P_; ++i) {
      if (step[i] == 0.0) continue;
      bc_[i] = (moved[i].b - base.b) / step[i];
      cc_[i] = (moved[i].c - base.c) / step[i];
      for (std::size_t j = 0; j < locs_.size(); ++j)
        wc_[j * P_ + i] = (weight(moved[i], locs_[j]) - weight(base, locs_[j])) / step[i];
    }
    b0_ = base.b;
    c0_ = base.c;
    for (std::size_t i = 0; i < P_; ++i) {
      b0_ -= bc_[i] * ctr[i];
      c0_ -= cc_[i] * ctr[i];
    }
    for (std::size_t j = 0; j < locs_.size(); ++j) {
      w0_[j] = weight(base, locs_[j]);
      for (std::size_t i = 0; i < P_; ++i) w0_[j] -= wc_[j * P_ + i] * ctr[i];
    }
    // verify on the corners and random interior points
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-10 * (1.0 + std::abs(a) + std::abs(b)); };
    auto matches = [&](std::span<const double> p) {
      const Sample s = sample(p);
      double b = b0_, c = c0_;
      for (std::size_t i = 0; i < P_; ++i) {
        b += bc_[i] * p[i];
        c += cc_[i] * p[i];
      }
      if (!close(b, s.b) || !close(c, s.c)) return false;
      for (const auto& [x, w] : s.atoms)
        if (!all_locs.count(x)) return false;
      for (std::size_t j = 0; j < locs_.size(); ++j) {
        double w = w0_[j];
        for (std::size_t i = 0; i < P_; ++i) w += wc_[j * P_ + i] * p[i];
        if (!close(w, weight(s, locs_[j]))) return false;
      }
      return true;
    };
    bool ok = true;
    if (P_ <= 10) fam_->for_each_grid_point(2, [&](std::span<const double> p) { ok = ok && matches(p); });
    rng::Stream rs(97, 4);
    for (int k = 0; k < 8 && ok; ++k) ok = matches(fam_->random_point(rs));
    affine_ = ok;
  }

  const ThetaFamily* fam_;
  std::size_t P_ = 0;
  bool affine_ = false;
  double b0_ = 0.0, c0_ = 0.0;
  std::vector<double> bc_, cc_, locs_, w0_, wc_;
};

}  // namespace levyot
