#pragma once

// Monte Carlo paths for piecewise-constant Levy schedules and terminal-marginal
// statistics (empirical characteristic functions, Kolmogorov-Smirnov).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "levyot/error.hpp"
#include "levyot/limit_lab.hpp"
#include "levyot/parallel.hpp"
#include "levyot/rng.hpp"
#include "levyot/triplet.hpp"

namespace levyot {

struct SimulationConfig {
  double horizon = 1.0;
  std::size_t n_steps = 1;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 1;
  double epsilon = 1e-3;  // jumps with |x| <= epsilon are not sampled individually
  bool gaussian_compensation = true;
  bool record_jumps = false;
  std::size_t workers = 1;  // 0 picks the hardware concurrency

  void validate() const {
    require(std::isfinite(horizon) && horizon > 0.0, "simulation: horizon must be positive");
    require(n_steps >= 1, "simulation: n_steps must be >= 1");
    require(n_paths >= 1, "simulation: n_paths must be >= 1");
    require(epsilon >= 0.0 && epsilon <= 1.0, "simulation: small-jump threshold must lie in [0, 1]");
  }
};

constexpr double kMaxExpectedJumps = 1e8;

/// Piecewise-constant schedule: segment i is active on [starts[i], starts[i+1]).
struct TripletSchedule {
  std::vector<double> starts;
  std::vector<LevyTriplet> pieces;

  static TripletSchedule constant(LevyTriplet t) { return {{0.0}, {std::move(t)}}; }

  /// One triplet per step of a uniform grid on [0, T].
  static TripletSchedule per_step(std::vector<LevyTriplet> ts, double horizon) {
    TripletSchedule s;
    for (std::size_t k = 0; k < ts.size(); ++k) s.starts.push_back(horizon * static_cast<double>(k) / ts.size());
    s.pieces = std::move(ts);
    return s;
  }

  std::size_t index_at(double t) const {
    const auto it = std::upper_bound(starts.begin(), starts.end(), t);
    return it == starts.begin() ? 0 : static_cast<std::size_t>(it - starts.begin()) - 1;
  }
};

struct JumpRecord {
  double time;
  Vec size;
};

struct PathBundle {
  std::size_t dim = 1, n_paths = 0, n_steps = 0;
  std::vector<double> time_grid;
  std::vector<double> values;  // path-major, then step, then coordinate
  std::vector<std::vector<JumpRecord>> jumps;

  double value(std::size_t path, std::size_t step, std::size_t coord = 0) const {
    return values[(path * (n_steps + 1) + step) * dim + coord];
  }
  std::vector<double> terminal(std::size_t coord = 0) const {
    std::vector<double> out(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) out[p] = value(p, n_steps, coord);
    return out;
  }
};

namespace detail {
// Per-step sampling data for one triplet.
struct StepLaw {
  Vec mean;    // drift over the step, including the compensator of the sampled jumps
  Mat factor;  // Gaussian increment = factor * standard normals
  std::vector<Atom> atoms;  // sampled jumps, weight = expected count over the step
  double expected_jumps = 0.0;
};

inline Mat psd_factor(const Mat& cov) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (cov + cov.transpose()));
  Vec s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal();
}

inline StepLaw step_law(const LevyTriplet& t, double dt, const SimulationConfig& cfg) {
  const auto d = static_cast<Eigen::Index>(t.dim());
  StepLaw law;
  law.mean = t.b() * dt;
  Mat cov = t.c() * dt;
  for (const Atom& a : t.F().discretize()) {
    if (a.x.norm() > cfg.epsilon) {
      law.atoms.push_back({a.x, a.w * dt});
      law.mean -= a.w * dt * truncate(a.x);
      law.expected_jumps += a.w * dt;
    } else if (cfg.gaussian_compensation) {
      cov += a.w * dt * a.x * a.x.transpose();
    }
  }
  law.factor = cov.isZero(0.0) ? Mat::Zero(d, d) : psd_factor(cov);
  return law;
}
}  // namespace detail

inline PathBundle simulate_paths(const TripletSchedule& schedule, const Vec& x0, const SimulationConfig& cfg) {
  cfg.validate();
  require(!schedule.pieces.empty() && schedule.pieces.size() == schedule.starts.size(),
          "simulation: schedule needs matching starts and pieces");
  require(schedule.starts.front() == 0.0, "simulation: schedule must start at t = 0");
  const std::size_t K = cfg.n_steps, d = schedule.pieces.front().dim();
  require(static_cast<std::size_t>(x0.size()) == d, "simulation: initial point has wrong dimension");
  const double dt = cfg.horizon / static_cast<double>(K);

  PathBundle out;
  out.dim = d;
  out.n_paths = cfg.n_paths;
  out.n_steps = K;
  for (std::size_t k = 0; k <= K; ++k) out.time_grid.push_back(k == K ? cfg.horizon : dt * static_cast<double>(k));

  // schedule breakpoints must sit on the time grid
  for (double s : schedule.starts) {
    const double pos = s / dt;
    require(std::abs(pos - std::round(pos)) <= 1e-9 * std::max(1.0, pos), "simulation: schedule is not constant on each step");
  }
  std::vector<detail::StepLaw> laws;
  for (const LevyTriplet& t : schedule.pieces) {
    require(t.dim() == d, "simulation: schedule dimensions differ");
    if (!std::isfinite(condition_b_value(t))) throw NumericalError("simulation: schedule has non-finite Condition (B) value");
    laws.push_back(detail::step_law(t, dt, cfg));
  }
  std::vector<std::size_t> law_of_step(K);
  double expected = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    law_of_step[k] = schedule.index_at(out.time_grid[k] + 0.5 * dt);
    expected += laws[law_of_step[k]].expected_jumps;
  }
  if (expected > kMaxExpectedJumps)
    throw NumericalError("simulation: expected jumps per path exceed 1e8; raise the small-jump threshold");

  out.values.assign(cfg.n_paths * (K + 1) * d, 0.0);
  if (cfg.record_jumps) out.jumps.assign(cfg.n_paths, {});
  parallel_for(cfg.n_paths, cfg.workers, [&](std::size_t p) {
    rng::Stream rs(cfg.seed, p);
    rng::Stream times(cfg.seed, p | (std::uint64_t{1} << 63));  // jump times never perturb the path draws
    Vec x = x0, z(static_cast<Eigen::Index>(d));
    double* row = &out.values[p * (K + 1) * d];
    for (std::size_t i = 0; i < d; ++i) row[i] = x[static_cast<Eigen::Index>(i)];
    for (std::size_t k = 0; k < K; ++k) {
      const detail::StepLaw& law = laws[law_of_step[k]];
      x += law.mean;
      if (!law.factor.isZero(0.0)) {
        for (std::size_t i = 0; i < d; ++i) z[static_cast<Eigen::Index>(i)] = rs.normal();
        x += law.factor * z;
      }
      for (const Atom& a : law.atoms) {
        const std::uint64_t n = rs.poisson(a.w);
        if (n == 0) continue;
        x += static_cast<double>(n) * a.x;
        if (cfg.record_jumps)
          for (std::uint64_t j = 0; j < n; ++j) out.jumps[p].push_back({out.time_grid[k] + dt * times.uniform(), a.x});
      }
      double* cell = row + (k + 1) * d;
      for (std::size_t i = 0; i < d; ++i) cell[i] = x[static_cast<Eigen::Index>(i)];
    }
    if (cfg.record_jumps)
      std::sort(out.jumps[p].begin(), out.jumps[p].end(),
                [](const JumpRecord& a, const JumpRecord& b) { return a.time < b.time; });
  });
  return out;
}

inline std::vector<Complex> empirical_cf(const std::vector<double>& samples, const std::vector<double>& u_grid) {
  require(!samples.empty(), "empirical_cf: no samples");
  std::vector<Complex> out;
  for (double u : u_grid) {
    double re = 0.0, im = 0.0;
    for (double x : samples) {
      re += std::cos(u * x);
      im += std::sin(u * x);
    }
    const double n = static_cast<double>(samples.size());
    out.emplace_back(re / n, im / n);
  }
  return out;
}

/// sup over the grid of |empirical cf - exp(T psi_t)|; 0 on an empty grid.
inline double cf_distance(const std::vector<double>& samples, const LevyTriplet& t, double horizon,
                          const std::vector<double>& u_grid) {
  if (u_grid.empty()) return 0.0;
  const std::vector<Complex> e = empirical_cf(samples, u_grid);
  double d = 0.0;
  for (std::size_t i = 0; i < u_grid.size(); ++i) d = std::max(d, std::abs(e[i] - std::exp(horizon * levy_exponent(t, u_grid[i]))));
  return d;
}

/// Distribution function with its left limits (they differ only at atoms).
struct Cdf {
  std::function<double(double)> right;
  std::function<double(double)> left;

  double operator()(double x) const { return right(x); }
  static Cdf continuous(std::function<double(double)> f) { return {f, f}; }
};

inline double normal_cdf(double x, double mean = 0.0, double var = 1.0) {
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * var));
}

/// Two-sided Kolmogorov-Smirnov statistic sup |F_N - F|.
inline double marginal_ks(std::vector<double> samples, const Cdf& ref) {
  require(!samples.empty(), "marginal_ks: no samples");
  std::sort(samples.begin(), samples.end());
  const double N = static_cast<double>(samples.size());
  double D = 0.0;
  for (std::size_t i = 0; i < samples.size();) {
    std::size_t j = i;
    // values within a relative 1e-9 count as one atom, matching the lattice slack of levy_marginal_cdf
    while (j < samples.size() && samples[j] - samples[i] <= 1e-9 * (1.0 + std::abs(samples[i]))) ++j;
    const double below = static_cast<double>(i) / N, upto = static_cast<double>(j) / N;
    D = std::max({D, std::abs(upto - ref.right(samples[i])), std::abs(below - ref.left(samples[i]))});
    i = j;
  }
  return std::clamp(D, 0.0, 1.0);
}

inline double marginal_ks(std::vector<double> samples, const std::function<double(double)>& ref) {
  return marginal_ks(std::move(samples), Cdf::continuous(ref));
}

/// Law of x0 + X_T for a 1-D triplet: Gaussian, or compound Poisson with at most
/// three atoms (plus an optional Gaussian part) by enumerating jump counts.
inline std::optional<Cdf> levy_marginal_cdf(const LevyTriplet& t, double horizon, double x0 = 0.0) {
  if (t.dim() != 1 || !t.F().pieces().empty() || t.F().atoms().size() > 3) return std::nullopt;
  const double var = t.c()(0, 0) * horizon;
  double shift = x0 + t.b()[0] * horizon;
  struct Axis { double x; std::vector<std::pair<std::uint64_t, double>> pmf; };
  std::vector<Axis> axes;
  double combos = 1.0;
  for (const Atom& a : t.F().atoms()) {
    const double x = a.x[0], m = a.w * horizon;
    shift -= m * std::clamp(x, -1.0, 1.0);
    Axis ax{x, {}};
    const double lo = std::max(0.0, std::floor(m - 12.0 * std::sqrt(m) - 10.0)), hi = std::ceil(m + 12.0 * std::sqrt(m) + 10.0);
    for (double k = lo; k <= hi; k += 1.0) {
      const double lp = k * std::log(m) - m - std::lgamma(k + 1.0);
      if (lp > -40.0) ax.pmf.emplace_back(static_cast<std::uint64_t>(k), std::exp(lp));
    }
    combos *= static_cast<double>(ax.pmf.size());
    axes.push_back(std::move(ax));
  }
  if (combos > 2e6) return std::nullopt;
  std::vector<std::pair<double, double>> support{{shift, 1.0}};
  for (const Axis& ax : axes) {
    std::vector<std::pair<double, double>> next;
    for (auto [loc, p] : support)
      for (auto [k, q] : ax.pmf)
        if (p * q > 1e-18) next.emplace_back(loc + static_cast<double>(k) * ax.x, p * q);
    support = std::move(next);
  }
  std::sort(support.begin(), support.end());
  std::vector<std::pair<double, double>> merged;
  for (auto [loc, p] : support) {
    if (!merged.empty() && std::abs(loc - merged.back().first) <= 1e-9 * (1.0 + std::abs(loc)))
      merged.back().second += p;
    else
      merged.emplace_back(loc, p);
  }
  double total = 0.0;
  for (auto& [loc, p] : merged) total += p;
  for (auto& [loc, p] : merged) p /= total;

  if (var > 0.0) {
    if (merged.size() > 20000) return std::nullopt;
    auto f = [merged, var](double x) {
      double acc = 0.0;
      for (auto [loc, p] : merged) acc += p * normal_cdf(x, loc, var);
      return std::min(acc, 1.0);
    };
    return Cdf::continuous(f);
  }
  std::vector<double> locs, cum;
  double run = 0.0;
  for (auto [loc, p] : merged) {
    locs.push_back(loc);
    run += p;
    cum.push_back(std::min(run, 1.0));
  }
  // atoms are matched with a relative slack so rounding in simulated sums does not split them
  auto right = [locs, cum](double x) {
    const double y = x + 1e-9 * (1.0 + std::abs(x));
    const auto it = std::upper_bound(locs.begin(), locs.end(), y);
    return it == locs.begin() ? 0.0 : cum[static_cast<std::size_t>(it - locs.begin()) - 1];
  };
  auto left = [locs, cum](double x) {
    const double y = x - 1e-9 * (1.0 + std::abs(x));
    const auto it = std::upper_bound(locs.begin(), locs.end(), y);
    return it == locs.begin() ? 0.0 : cum[static_cast<std::size_t>(it - locs.begin()) - 1];
  };
  return Cdf{right, left};
}

struct ConvergenceRow {
  double n;
  double cf_distance;
  std::optional<double> ks;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  bool cf_decreasing = true;
  bool ks_decreasing = true;  // strict, over the rows where KS is available
  std::vector<double> u_grid;
};

inline ConvergenceReport convergence_experiment(const TripletSequence& seq, const LevyTriplet& target,
                                                const SimulationConfig& cfg, const std::vector<double>& u_grid) {
  require(target.dim() == 1, "convergence experiment works in dimension 1");
  seq.validate();
  const std::optional<Cdf> ref = levy_marginal_cdf(target, cfg.horizon);
  ConvergenceReport rep;
  rep.u_grid = u_grid;
  for (double n : seq.n_schedule) {
    const PathBundle b = simulate_paths(TripletSchedule::constant(seq.at(n)), Vec::Zero(1), cfg);
    const std::vector<double> x = b.terminal();
    ConvergenceRow row{n, cf_distance(x, target, cfg.horizon, u_grid), std::nullopt};
    if (ref) row.ks = marginal_ks(x, *ref);
    if (!rep.rows.empty()) {
      rep.cf_decreasing = rep.cf_decreasing && row.cf_distance < rep.rows.back().cf_distance;
      if (row.ks && rep.rows.back().ks) rep.ks_decreasing = rep.ks_decreasing && *row.ks < *rep.rows.back().ks;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

/// Default oracle grid for CF checks: 41 points in [-2, 2].
inline std::vector<double> default_cf_grid() {
  std::vector<double> g;
  for (int i = -20; i <= 20; ++i) g.push_back(0.1 * i);
  return g;
}

}  // namespace levyot
