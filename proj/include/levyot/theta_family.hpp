#pragma once

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "levyot/error.hpp"
#include "levyot/rng.hpp"
#include "levyot/triplet.hpp"

namespace levyot {

struct ParamAxis {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
};

enum class StructuralTag { ProductBox, General };

// Parameter indices feeding each characteristic (product-box families only).
struct ParamBlocks {
  std::vector<std::size_t> b, c, F;
};

using TripletMap = std::function<LevyTriplet(std::span<const double>)>;

/// Parametric stand-in for a set of triplets: p in a box maps to (b(p), c(p), F(p)).
class ThetaFamily {
public:
  ThetaFamily(std::vector<ParamAxis> box, TripletMap map, StructuralTag tag = StructuralTag::General,
              ParamBlocks blocks = {})
      : box_(std::move(box)), map_(std::move(map)), tag_(tag), blocks_(std::move(blocks)) {
    for (const ParamAxis& a : box_)
      require(std::isfinite(a.lo) && std::isfinite(a.hi) && a.lo <= a.hi,
              "parameter '" + a.name + "' has an empty or non-finite range");
    require(static_cast<bool>(map_), "family needs a triplet map");
    if (tag_ == StructuralTag::ProductBox) {
      std::vector<int> seen(box_.size(), 0);
      for (const auto* blk : {&blocks_.b, &blocks_.c, &blocks_.F})
        for (std::size_t i : *blk) {
          require(i < box_.size(), "parameter block index out of range");
          ++seen[i];
        }
      for (std::size_t i = 0; i < seen.size(); ++i)
        require(seen[i] == 1, "product-box family: parameter '" + box_[i].name + "' must belong to exactly one block");
    }
  }

  std::size_t n_params() const { return box_.size(); }
  const std::vector<ParamAxis>& box() const { return box_; }
  StructuralTag tag() const { return tag_; }
  const ParamBlocks& blocks() const { return blocks_; }

  LevyTriplet evaluate(std::span<const double> p) const {
    require(p.size() == box_.size(), "family: wrong number of parameters");
    return map_(p);
  }

  std::vector<double> center() const {
    std::vector<double> p;
    for (const ParamAxis& a : box_) p.push_back(0.5 * (a.lo + a.hi));
    return p;
  }
  std::size_t dim() const { return evaluate(center()).dim(); }

  std::vector<double> clamp(std::vector<double> p) const {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::clamp(p[i], box_[i].lo, box_[i].hi);
    return p;
  }

  /// Calls visit(p) on the tensor grid with `resolution` points per axis, corners included.
  template <class Visit>
  void for_each_grid_point(std::size_t resolution, Visit&& visit) const {
    require(resolution >= 2, "grid resolution must be >= 2 points per axis");
    const std::size_t P = box_.size();
    std::vector<std::size_t> idx(P, 0);
    std::vector<double> p(P);
    for (;;) {
      for (std::size_t i = 0; i < P; ++i) {
        const double s = static_cast<double>(idx[i]) / static_cast<double>(resolution - 1);
        p[i] = idx[i] + 1 == resolution ? box_[i].hi : box_[i].lo + s * (box_[i].hi - box_[i].lo);
      }
      visit(std::span<const double>(p));
      std::size_t i = 0;
      while (i < P && ++idx[i] == resolution) idx[i++] = 0;
      if (i == P) break;
    }
  }

  std::vector<double> random_point(rng::Stream& s) const {
    std::vector<double> p;
    for (const ParamAxis& a : box_) p.push_back(a.lo + s.uniform() * (a.hi - a.lo));
    return p;
  }

  /// Map defined and finite at every corner and at `samples` random interior points.
  void validate(std::size_t samples = 16, std::uint64_t seed = 7) const {
    auto check = [this](std::span<const double> p) {
      LevyTriplet t = evaluate(p);
      if (!std::isfinite(condition_b_value(t))) throw NumericalError("family: non-finite triplet");
    };
    for_each_grid_point(2, check);
    rng::Stream s(seed, 0);
    for (std::size_t k = 0; k < samples; ++k) check(random_point(s));
  }

private:
  std::vector<ParamAxis> box_;
  TripletMap map_;
  StructuralTag tag_;
  ParamBlocks blocks_;
};

/// Grid maximum; always a lower bound on the supremum over the box.
struct ConditionBReport {
  double sup_estimate = 0.0;
  bool finite = true;
  std::size_t resolution = 0;
  std::vector<double> argmax;
  bool lower_bound = true;
};

inline ConditionBReport family_condition_b(const ThetaFamily& fam, std::size_t resolution) {
  ConditionBReport rep;
  rep.resolution = resolution;
  rep.sup_estimate = -1.0;
  fam.for_each_grid_point(resolution, [&](std::span<const double> p) {
    double v;
    try {
      v = condition_b_value(fam.evaluate(p));
    } catch (const ValidationError& e) {
      throw NumericalError(std::string("family evaluator failed at a grid point: ") + e.what());
    }
    if (!std::isfinite(v)) {
      rep.finite = false;
      return;
    }
    if (v > rep.sup_estimate) {
      rep.sup_estimate = v;
      rep.argmax.assign(p.begin(), p.end());
    }
  });
  if (!rep.finite) rep.sup_estimate = std::numeric_limits<double>::infinity();
  return rep;
}

enum class JumpVerdict { Holds, Fails, Inconclusive };

inline const char* to_string(JumpVerdict v) {
  switch (v) {
    case JumpVerdict::Holds: return "holds";
    case JumpVerdict::Fails: return "fails";
    default: return "inconclusive";
  }
}

struct ConditionJReport {
  std::vector<std::pair<double, double>> profile;  // (delta, grid sup of small-jump second moment)
  JumpVerdict verdict = JumpVerdict::Inconclusive;
  std::optional<double> decay_exponent;  // log-log slope when the tail is positive
  std::size_t resolution = 0;
};

constexpr double kTolJ = 1e-3;
constexpr double kFailFactor = 10.0;

namespace detail {
inline void require_decreasing(std::span<const double> deltas, std::size_t min_len) {
  require(deltas.size() >= min_len, "delta schedule needs at least " + std::to_string(min_len) + " entries");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    require(deltas[i] > 0.0, "delta schedule entries must be positive");
    if (i > 0) require(deltas[i] < deltas[i - 1], "delta schedule must be strictly decreasing");
  }
}

inline std::optional<double> loglog_slope(const std::vector<std::pair<double, double>>& prof) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (auto [d, v] : prof) {
    if (v <= 0.0) continue;
    const double x = std::log(d), y = std::log(v);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++n;
  }
  if (n < 2) return std::nullopt;
  const double den = n * sxx - sx * sx;
  if (den <= 0.0) return std::nullopt;
  return (n * sxy - sx * sy) / den;
}
}  // namespace detail

inline ConditionJReport family_condition_j(const ThetaFamily& fam, std::span<const double> deltas,
                                           std::size_t resolution) {
  detail::require_decreasing(deltas, 3);
  ConditionJReport rep;
  rep.resolution = resolution;
  for (double d : deltas) rep.profile.emplace_back(d, 0.0);
  fam.for_each_grid_point(resolution, [&](std::span<const double> p) {
    const LevyTriplet t = fam.evaluate(p);
    for (auto& [d, sup] : rep.profile) sup = std::max(sup, small_jump_second_moment(t.F(), d));
  });
  rep.decay_exponent = detail::loglog_slope(rep.profile);

  bool all_high = true, nonincreasing = true;
  for (std::size_t i = 0; i < rep.profile.size(); ++i) {
    all_high = all_high && rep.profile[i].second >= kFailFactor * kTolJ;
    if (i > 0) nonincreasing = nonincreasing && rep.profile[i].second <= rep.profile[i - 1].second * (1 + 1e-12);
  }
  const double last = rep.profile.back().second;
  const bool vanishing = last <= 1e-14;
  const bool power_decay = rep.decay_exponent && *rep.decay_exponent > 0.0;
  if (all_high)
    rep.verdict = JumpVerdict::Fails;
  else if (last < kTolJ && nonincreasing && (vanishing || power_decay))
    rep.verdict = JumpVerdict::Holds;
  else
    rep.verdict = JumpVerdict::Inconclusive;
  return rep;
}

namespace detail {
inline bool same_measure(const LevyMeasure& a, const LevyMeasure& b) {
  const auto da = a.discretize(), db = b.discretize();
  if (da.size() != db.size()) return false;
  for (std::size_t i = 0; i < da.size(); ++i)
    if (da[i].w != db[i].w || da[i].x != db[i].x) return false;
  return true;
}
}  // namespace detail

/// Product-box families whose sampled cross-perturbations leave the other
/// blocks bit-identical; general families are rejected outright.
inline bool box_independence_check(const ThetaFamily& fam, std::size_t samples, std::uint64_t seed = 11) {
  if (fam.tag() != StructuralTag::ProductBox) return false;
  rng::Stream s(seed, 1);
  const ParamBlocks& bl = fam.blocks();
  for (std::size_t k = 0; k < samples; ++k) {
    const std::vector<double> p = fam.random_point(s);
    const LevyTriplet base = fam.evaluate(p);
    auto perturbed = [&](const std::vector<std::size_t>& block) {
      std::vector<double> q = p;
      for (std::size_t i : block) q[i] = fam.box()[i].lo + s.uniform() * (fam.box()[i].hi - fam.box()[i].lo);
      return fam.evaluate(q);
    };
    const LevyTriplet tF = perturbed(bl.F);
    if (tF.b() != base.b() || tF.c() != base.c()) return false;
    const LevyTriplet tc = perturbed(bl.c);
    if (tc.b() != base.b() || !detail::same_measure(tc.F(), base.F())) return false;
    const LevyTriplet tb = perturbed(bl.b);
    if (tb.c() != base.c() || !detail::same_measure(tb.F(), base.F())) return false;
  }
  return true;
}

}  // namespace levyot
