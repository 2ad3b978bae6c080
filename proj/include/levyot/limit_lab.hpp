#pragma once

// Diagnostics for sequences of triplets: exponent limits, diffusion created
// by vanishing small jumps, limit identification and closedness probes.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "levyot/error.hpp"
#include "levyot/theta_family.hpp"
#include "levyot/triplet.hpp"

namespace levyot {

constexpr double kTolD = 1e-3;

inline std::vector<double> default_delta_schedule() { return {0.1, 0.05, 0.02, 0.01, 0.005}; }

struct TripletSequence {
  std::function<LevyTriplet(double)> index_map;
  std::vector<double> n_schedule{10, 1e2, 1e3, 1e4, 1e5};
  // Optional parameter inversion n -> p for checking membership in a family.
  std::function<std::vector<double>(double)> params;

  LevyTriplet at(double n) const { return index_map(n); }

  /// Checks finiteness along the schedule; returns the largest Condition (B) value seen.
  double validate() const {
    require(static_cast<bool>(index_map), "sequence needs an index map");
    require(!n_schedule.empty(), "sequence needs a nonempty n schedule");
    double bound = 0.0;
    for (std::size_t i = 0; i < n_schedule.size(); ++i) {
      require(n_schedule[i] > 0.0, "n schedule entries must be positive");
      if (i > 0) require(n_schedule[i] > n_schedule[i - 1], "n schedule must be increasing");
      const double v = condition_b_value(at(n_schedule[i]));
      if (!std::isfinite(v)) throw NumericalError("sequence triplet is not finite at n = " + std::to_string(n_schedule[i]));
      bound = std::max(bound, v);
    }
    return bound;
  }
};

struct ExponentLimit {
  Vec u;
  std::vector<Complex> values;  // psi_n(u) along the schedule
  Complex limit;
  double error = 0.0;           // |psi_last - psi_prev|
  bool cauchy = true;
  bool extrapolated = false;
};

namespace detail {
// Aitken delta-squared on the last three terms when they look geometric.
inline std::optional<double> aitken(double x0, double x1, double x2) {
  const double d1 = x1 - x0, d2 = x2 - x1;
  if (d1 == 0.0 || d2 == 0.0) return std::nullopt;
  const double r = d2 / d1;
  if (!(r > 0.0 && r < 0.9)) return std::nullopt;
  return x2 - d2 * d2 / (d2 - d1);
}
}  // namespace detail

inline std::vector<ExponentLimit> exponent_limit_profile(const TripletSequence& seq, const std::vector<Vec>& u_grid) {
  require(!u_grid.empty(), "exponent_limit_profile: frequency grid must be nonempty");
  require(!seq.n_schedule.empty(), "exponent_limit_profile: empty n schedule");
  std::vector<LevyTriplet> ts;
  for (double n : seq.n_schedule) ts.push_back(seq.at(n));
  std::vector<ExponentLimit> out;
  for (const Vec& u : u_grid) {
    ExponentLimit e;
    e.u = u;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const Complex v = levy_exponent(ts[i], u);
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw NumericalError("non-finite exponent at n = " + std::to_string(seq.n_schedule[i]));
      e.values.push_back(v);
    }
    const std::size_t k = e.values.size();
    e.limit = e.values.back();
    if (k >= 2) e.error = std::abs(e.values[k - 1] - e.values[k - 2]);
    if (k >= 3) {
      const double d1 = std::abs(e.values[k - 2] - e.values[k - 3]);
      e.cauchy = e.error <= 0.9 * d1 + 1e-14 * (1.0 + std::abs(e.values.back()));
      auto re = detail::aitken(e.values[k - 3].real(), e.values[k - 2].real(), e.values[k - 1].real());
      auto im = detail::aitken(e.values[k - 3].imag(), e.values[k - 2].imag(), e.values[k - 1].imag());
      if (e.cauchy && (re || im)) {
        e.limit = Complex(re.value_or(e.limit.real()), im.value_or(e.limit.imag()));
        e.extrapolated = true;
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

enum class LimitVerdict { PurelyDiscontinuous, DiffusionCreated, Inconclusive };

inline const char* to_string(LimitVerdict v) {
  switch (v) {
    case LimitVerdict::PurelyDiscontinuous: return "purely-discontinuous-limit";
    case LimitVerdict::DiffusionCreated: return "diffusion-created";
    default: return "inconclusive";
  }
}

struct DiffusionDiagnostic {
  double estimate = 0.0;
  LimitVerdict verdict = LimitVerdict::Inconclusive;
  std::vector<double> deltas;
  std::vector<std::vector<double>> table;  // table[i][j] = T * small-jump moment at deltas[i], n_schedule[j]
  std::vector<double> tail_sup;            // max over the last three n, per delta
};

inline DiffusionDiagnostic diffusion_creation_diagnostic(const TripletSequence& seq, const std::vector<double>& deltas,
                                                         double horizon = 1.0) {
  detail::require_decreasing(deltas, 1);
  require(horizon > 0.0, "diffusion diagnostic: horizon must be positive");
  require(!seq.n_schedule.empty(), "diffusion diagnostic: empty n schedule");
  DiffusionDiagnostic d;
  d.deltas = deltas;
  d.table.assign(deltas.size(), {});
  for (double n : seq.n_schedule) {
    const LevyTriplet t = seq.at(n);
    for (std::size_t i = 0; i < deltas.size(); ++i)
      d.table[i].push_back(horizon * small_jump_second_moment(t.F(), deltas[i]));
  }
  const std::size_t N = seq.n_schedule.size(), from = N > 3 ? N - 3 : 0;
  for (const auto& row : d.table) d.tail_sup.push_back(*std::max_element(row.begin() + from, row.end()));

  const std::size_t k = d.tail_sup.size();
  d.estimate = d.tail_sup.back();
  if (k >= 3) {
    if (auto a = detail::aitken(d.tail_sup[k - 3], d.tail_sup[k - 2], d.tail_sup[k - 1]))
      d.estimate = std::clamp(*a, 0.0, d.tail_sup.back());
  }
  if (d.estimate <= kTolD)
    d.verdict = LimitVerdict::PurelyDiscontinuous;
  else if (d.estimate >= 10.0 * kTolD)
    d.verdict = LimitVerdict::DiffusionCreated;
  return d;
}

/// Candidate limit form in d = 1: drift, diffusion and atoms at fixed locations.
struct LimitStructure {
  std::vector<double> atom_locations;
};

struct IdentifiedTriplet {
  LevyTriplet triplet;
  double fit_residual = 0.0;  // sup over the grid of |psi_fit(u) - limit(u)|
};

inline IdentifiedTriplet limit_triplet_identify(const std::vector<ExponentLimit>& profile, const LimitStructure& s) {
  for (double x : s.atom_locations) require(x != 0.0 && std::isfinite(x), "limit structure: atoms must be nonzero");
  const std::size_t P = 2 + s.atom_locations.size();
  require(profile.size() >= P, "limit_triplet_identify: underdetermined fit (" + std::to_string(profile.size()) +
                                   " frequencies for " + std::to_string(P) + " parameters)");
  for (const ExponentLimit& e : profile) require(e.u.size() == 1, "limit_triplet_identify supports dimension 1 only");

  const Eigen::Index R = static_cast<Eigen::Index>(2 * profile.size());
  Mat A = Mat::Zero(R, static_cast<Eigen::Index>(P));
  Vec y(R);
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const double u = profile[i].u[0];
    const auto re = static_cast<Eigen::Index>(2 * i), im = re + 1;
    A(im, 0) = u;
    A(re, 1) = -0.5 * u * u;
    for (std::size_t j = 0; j < s.atom_locations.size(); ++j) {
      const double x = s.atom_locations[j];
      const Complex k = detail::jump_kernel(u * x, u * std::clamp(x, -1.0, 1.0));
      A(re, static_cast<Eigen::Index>(2 + j)) = k.real();
      A(im, static_cast<Eigen::Index>(2 + j)) = k.imag();
    }
    y[re] = profile[i].limit.real();
    y[im] = profile[i].limit.imag();
  }

  // Nonnegativity of c and the weights by active-set refits.
  std::vector<bool> fixed(P, false);
  Vec theta = Vec::Zero(static_cast<Eigen::Index>(P));
  for (std::size_t iter = 0; iter <= P; ++iter) {
    std::vector<Eigen::Index> free;
    for (std::size_t j = 0; j < P; ++j)
      if (!fixed[j]) free.push_back(static_cast<Eigen::Index>(j));
    Mat Af(R, static_cast<Eigen::Index>(free.size()));
    for (std::size_t j = 0; j < free.size(); ++j) Af.col(static_cast<Eigen::Index>(j)) = A.col(free[j]);
    const Vec sol = Af.colPivHouseholderQr().solve(y);
    theta.setZero();
    for (std::size_t j = 0; j < free.size(); ++j) theta[free[j]] = sol[static_cast<Eigen::Index>(j)];
    bool changed = false;
    for (std::size_t j = 1; j < P; ++j)
      if (!fixed[j] && theta[static_cast<Eigen::Index>(j)] < 0.0) {
        fixed[j] = true;
        theta[static_cast<Eigen::Index>(j)] = 0.0;
        changed = true;
      }
    if (!changed) break;
  }

  LevyMeasure F(1);
  for (std::size_t j = 0; j < s.atom_locations.size(); ++j)
    F.add_atom(Vec::Constant(1, s.atom_locations[j]), theta[static_cast<Eigen::Index>(2 + j)]);
  IdentifiedTriplet out{LevyTriplet::scalar(theta[0], theta[1], F), 0.0};
  const Vec r = A * theta - y;
  for (Eigen::Index i = 0; i + 1 < R; i += 2) out.fit_residual = std::max(out.fit_residual, std::hypot(r[i], r[i + 1]));
  return out;
}

/// 40 equispaced frequencies in [-2, 2] without 0.
inline std::vector<Vec> default_fit_grid() {
  std::vector<Vec> g;
  for (int i = -20; i <= 20; ++i)
    if (i != 0) g.push_back(Vec::Constant(1, 0.1 * i));
  return g;
}

inline FeatureMapConfig default_feature_config(std::size_t dim = 1) {
  FeatureMapConfig cfg;
  cfg.m_max = 8;
  for (double u : {0.5, 1.0, 2.0, 4.0}) cfg.u_grid.push_back(Vec::Constant(static_cast<Eigen::Index>(dim), u));
  return cfg;
}

/// |db|^2 + |dc|_F^2 + |d phi|^2 with phi the measure features.
inline double triplet_distance2(const LevyTriplet& a, const LevyTriplet& b, const FeatureMapConfig& cfg) {
  const std::vector<double> fa = measure_features(a.F(), cfg), fb = measure_features(b.F(), cfg);
  double d = (a.b() - b.b()).squaredNorm() + (a.c() - b.c()).squaredNorm();
  for (std::size_t i = 0; i < fa.size(); ++i) d += (fa[i] - fb[i]) * (fa[i] - fb[i]);
  return d;
}

struct NearestMember {
  std::vector<double> params;
  LevyTriplet triplet;
  double residual = std::numeric_limits<double>::infinity();  // sqrt of the distance
};

/// Minimizes the triplet distance over the box: grid search, then compass search.
inline NearestMember nearest_member(const ThetaFamily& fam, const LevyTriplet& target, bool use_u_map,
                                    const FeatureMapConfig& cfg) {
  auto member = [&](std::span<const double> p) {
    LevyTriplet t = fam.evaluate(p);
    return use_u_map ? modified_triplet(t) : t;
  };
  auto dist = [&](std::span<const double> p) {
    try {
      return triplet_distance2(member(p), target, cfg);
    } catch (const ValidationError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const std::size_t P = fam.n_params();
  std::size_t res = 2;
  while (std::pow(static_cast<double>(res + 1), static_cast<double>(P)) <= 4096.0 && res < 65) ++res;
  std::vector<double> best;
  double fbest = std::numeric_limits<double>::infinity();
  fam.for_each_grid_point(res, [&](std::span<const double> p) {
    const double v = dist(p);
    if (v < fbest) {
      fbest = v;
      best.assign(p.begin(), p.end());
    }
  });
  if (best.empty()) best = fam.center();
  std::vector<double> step(P);
  for (std::size_t i = 0; i < P; ++i) step[i] = (fam.box()[i].hi - fam.box()[i].lo) / static_cast<double>(res - 1);
  for (int it = 0; it < 20000 && fbest > 0.0; ++it) {
    bool improved = false;
    for (std::size_t i = 0; i < P && !improved; ++i)
      for (double sgn : {1.0, -1.0}) {
        std::vector<double> q = best;
        q[i] += sgn * step[i];
        q = fam.clamp(q);
        if (q == best) continue;
        const double v = dist(q);
        if (v < fbest) {
          fbest = v;
          best = q;
          improved = true;
          break;
        }
      }
    if (!improved) {
      bool tiny = true;
      for (std::size_t i = 0; i < P; ++i) {
        step[i] *= 0.5;
        tiny = tiny && step[i] <= 1e-13 * std::max(1.0, fam.box()[i].hi - fam.box()[i].lo);
      }
      if (tiny) break;
    } else {
      for (double& s : step) s *= 1.5;
    }
  }
  return {best, member(best), std::sqrt(fbest)};
}

enum class Membership { Yes, No, Inconclusive };

inline const char* to_string(Membership m) {
  switch (m) {
    case Membership::Yes: return "yes";
    case Membership::No: return "no";
    default: return "inconclusive";
  }
}

struct ClosednessOptions {
  LimitStructure structure;
  std::vector<Vec> fit_grid = default_fit_grid();
  FeatureMapConfig features = default_feature_config();
  double membership_tol = 1e-6;
  double seq_tol = 1e-8;
  double fit_tol = 1e-3;  // identification residual above this makes the probe inconclusive
};

struct ClosednessResult {
  Membership limit_in_set = Membership::Inconclusive;
  LevyTriplet limit;           // identified limit, mapped by u when requested
  double fit_residual = 0.0;
  NearestMember witness;
  double max_sequence_residual = 0.0;
  std::string note;
};

inline ClosednessResult closedness_probe(const ThetaFamily& fam, const TripletSequence& seq, bool use_u_map,
                                         const ClosednessOptions& opt = {}) {
  ClosednessResult res;
  seq.validate();
  for (double n : seq.n_schedule) {
    const LevyTriplet t = seq.at(n);
    double r;
    if (seq.params) {
      const std::vector<double> p = seq.params(n);
      require(fam.clamp(p) == p, "sequence parameter at n = " + std::to_string(n) + " lies outside the box");
      r = std::sqrt(triplet_distance2(fam.evaluate(p), t, opt.features));
    } else {
      r = nearest_member(fam, t, false, opt.features).residual;
    }
    res.max_sequence_residual = std::max(res.max_sequence_residual, r);
  }
  require(res.max_sequence_residual <= opt.seq_tol,
          "sequence does not lie in the family (residual " + std::to_string(res.max_sequence_residual) + ")");

  const auto profile = exponent_limit_profile(seq, opt.fit_grid);
  const IdentifiedTriplet id = limit_triplet_identify(profile, opt.structure);
  res.fit_residual = id.fit_residual;
  res.limit = use_u_map ? modified_triplet(id.triplet) : id.triplet;
  res.witness = nearest_member(fam, res.limit, use_u_map, opt.features);
  bool cauchy = true;
  for (const ExponentLimit& e : profile) cauchy = cauchy && e.cauchy;
  if (!cauchy || id.fit_residual > opt.fit_tol) {
    res.note = !cauchy ? "exponent sequence is not Cauchy on the fit grid" : "limit structure fits poorly";
    res.limit_in_set = Membership::Inconclusive;
  } else {
    res.limit_in_set = res.witness.residual <= opt.membership_tol ? Membership::Yes : Membership::No;
  }
  return res;
}

struct LimitReport {
  std::vector<ExponentLimit> exponent_profile;
  DiffusionDiagnostic diffusion;
  std::optional<IdentifiedTriplet> identified;
  LimitVerdict verdict = LimitVerdict::Inconclusive;
  double condition_b_bound = 0.0;
};

inline LimitReport analyze_sequence(const TripletSequence& seq, const std::vector<double>& deltas, double horizon,
                                    const LimitStructure& structure, const std::vector<Vec>& fit_grid = default_fit_grid()) {
  LimitReport r;
  r.condition_b_bound = seq.validate();
  r.exponent_profile = exponent_limit_profile(seq, fit_grid);
  r.diffusion = diffusion_creation_diagnostic(seq, deltas, horizon);
  r.verdict = r.diffusion.verdict;
  if (fit_grid.size() >= 2 + structure.atom_locations.size() && fit_grid.front().size() == 1)
    r.identified = limit_triplet_identify(r.exponent_profile, structure);
  return r;
}

}  // namespace levyot
