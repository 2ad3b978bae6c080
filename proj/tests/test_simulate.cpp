#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "levyot/simulate.hpp"
#include "test_support.hpp"

using namespace levyot;

namespace {

LevyTriplet scaled_poisson(double n) { return LevyTriplet::scalar(0, 0, LevyMeasure::dirac(1.0 / std::sqrt(n), n)); }

double mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }
double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / (x.size() - 1);
}
// standard error of the sample variance from the fourth central moment
double variance_se(const std::vector<double>& x) {
  const double m = mean(x), v = variance(x);
  double m4 = 0.0;
  for (double a : x) m4 += std::pow(a - m, 4);
  m4 /= x.size();
  return std::sqrt(std::max(m4 - v * v, 0.0) / x.size());
}

SimulationConfig config(std::size_t paths, std::uint64_t seed = 17, std::size_t steps = 1) {
  SimulationConfig c;
  c.n_paths = paths;
  c.seed = seed;
  c.n_steps = steps;
  return c;
}

}  // namespace

TEST(SimulatePaths, Examples) {
  const PathBundle zero = simulate_paths(TripletSchedule::constant(LevyTriplet::scalar(0, 0)), Vec::Zero(1), config(100, 1, 10));
  for (double v : zero.values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(zero.time_grid.front(), 0.0);
  EXPECT_EQ(zero.time_grid.back(), 1.0);

  const std::size_t N = 100000;
  const auto bm = simulate_paths(TripletSchedule::constant(LevyTriplet::scalar(0, 1)), Vec::Zero(1), config(N));
  EXPECT_NEAR(variance(bm.terminal()), 1.0, 4.0 / std::sqrt(N) * std::sqrt(2.0));

  SimulationConfig c = config(N);
  c.epsilon = 0.0;
  const auto sp = simulate_paths(TripletSchedule::constant(scaled_poisson(1e4)), Vec::Zero(1), c);
  const auto x = sp.terminal();
  EXPECT_NEAR(mean(x), 0.0, 4.0 / std::sqrt(N));
  EXPECT_NEAR(variance(x), 1.0, 0.05);
}

TEST(SimulatePaths, InitialPointAndJumpLog) {
  SimulationConfig c = config(50, 3, 20);
  c.record_jumps = true;
  const LevyTriplet t = LevyTriplet::scalar(0.1, 0, LevyMeasure::dirac(2.0, 3.0));
  const PathBundle b = simulate_paths(TripletSchedule::constant(t), Vec::Constant(1, 1.5), c);
  for (std::size_t p = 0; p < b.n_paths; ++p) {
    EXPECT_EQ(b.value(p, 0), 1.5);
    double prev = 0.0;
    for (const JumpRecord& j : b.jumps[p]) {
      EXPECT_GE(j.time, prev);
      EXPECT_LE(j.time, 1.0);
      EXPECT_EQ(j.size[0], 2.0);
      prev = j.time;
    }
    // b - w h(2) drift per unit time plus 2 per jump
    EXPECT_NEAR(b.value(p, 20), 1.5 + (0.1 - 3.0) + 2.0 * b.jumps[p].size(), 1e-12);
  }
  SimulationConfig plain = c;
  plain.record_jumps = false;
  EXPECT_EQ(simulate_paths(TripletSchedule::constant(t), Vec::Constant(1, 1.5), plain).values, b.values);
}

TEST(SimulatePaths, RejectsBadInput) {
  SimulationConfig c = config(10);
  c.epsilon = 2.0;
  EXPECT_THROW(simulate_paths(TripletSchedule::constant(LevyTriplet::scalar(0, 1)), Vec::Zero(1), c), ValidationError);
  c = config(10, 1, 3);
  TripletSchedule off{{0.0, 0.5}, {LevyTriplet::scalar(0, 1), LevyTriplet::scalar(0, 2)}};
  EXPECT_THROW(simulate_paths(off, Vec::Zero(1), c), ValidationError);
  c = config(10);
  c.epsilon = 0.0;
  EXPECT_THROW(simulate_paths(TripletSchedule::constant(scaled_poisson(1e9)), Vec::Zero(1), c), NumericalError);
}

TEST(SimulatePaths, ScheduleSwitchesAtBreakpoints) {
  TripletSchedule s{{0.0, 0.5}, {LevyTriplet::scalar(1, 0), LevyTriplet::scalar(-1, 0)}};
  const PathBundle b = simulate_paths(s, Vec::Zero(1), config(3, 1, 4));
  EXPECT_NEAR(b.value(0, 2), 0.5, 1e-15);
  EXPECT_NEAR(b.value(0, 4), 0.0, 1e-15);
}

TEST(SimulatePaths, MultiDimensionalCovariance) {
  Mat c(2, 2);
  c << 1.0, 0.6, 0.6, 2.0;
  LevyMeasure F(2);
  Vec x(2);
  x << 0.3, -0.4;
  F.add_atom(x, 5.0);
  const LevyTriplet t(Vec::Zero(2), c, F);
  const std::size_t N = 100000;
  const PathBundle b = simulate_paths(TripletSchedule::constant(t), Vec::Zero(2), config(N, 5, 4));
  const auto a = b.terminal(0), z = b.terminal(1);
  const double ma = mean(a), mz = mean(z);
  double cov = 0.0;
  for (std::size_t i = 0; i < N; ++i) cov += (a[i] - ma) * (z[i] - mz);
  cov /= N - 1;
  const Mat ct = modified_triplet(t).c();
  EXPECT_NEAR(variance(a), ct(0, 0), 5 * variance_se(a));
  EXPECT_NEAR(variance(z), ct(1, 1), 5 * variance_se(z));
  EXPECT_NEAR(cov, ct(0, 1), 0.03);
}

TEST(EmpiricalCf, Examples) {
  for (Complex v : empirical_cf(std::vector<double>(10, 0.0), {-1.0, 0.3, 5.0})) EXPECT_EQ(v, Complex(1.0, 0.0));
  const double a = 0.7;
  const auto sym = empirical_cf({-a, a}, {0.5, 2.0});
  EXPECT_NEAR(sym[0].real(), std::cos(0.5 * a), 1e-15);
  EXPECT_NEAR(sym[1].real(), std::cos(2.0 * a), 1e-15);
  EXPECT_NEAR(sym[0].imag(), 0.0, 1e-15);
  rng::Stream s(8, 0);
  std::vector<double> z(100000);
  for (double& v : z) v = s.normal();
  EXPECT_NEAR(std::abs(empirical_cf(z, {1.0})[0] - std::exp(-0.5)), 0.0, 0.02);
  EXPECT_THROW(empirical_cf({}, {1.0}), ValidationError);
}

TEST(CfDistance, Examples) {
  rng::Stream s(9, 0);
  std::vector<double> z(100000);
  for (double& v : z) v = s.normal();
  EXPECT_LE(cf_distance(z, LevyTriplet::scalar(0, 1), 1.0, default_cf_grid()), 0.02);
  const double gap = std::exp(-0.5) * std::abs(1.0 - std::exp(Complex(0, 1)));
  EXPECT_GE(cf_distance(z, LevyTriplet::scalar(1, 1), 1.0, {1.0}), gap - 0.02);
  EXPECT_EQ(cf_distance(z, LevyTriplet::scalar(1, 1), 1.0, {}), 0.0);
}

TEST(MarginalKs, Examples) {
  rng::Stream s(10, 0);
  const std::size_t N = 100000;
  std::vector<double> z(N);
  for (double& v : z) v = s.normal();
  auto phi = [](double x) { return normal_cdf(x); };
  EXPECT_LE(marginal_ks(z, phi), 1.95 / std::sqrt(N));
  EXPECT_DOUBLE_EQ(marginal_ks(std::vector<double>(100, 0.0), phi), 0.5);
  // exact quantiles of the logistic law
  std::vector<double> q;
  const std::size_t M = 999;
  for (std::size_t i = 1; i <= M; ++i) {
    const double p = static_cast<double>(i) / (M + 1);
    q.push_back(std::log(p / (1 - p)));
  }
  EXPECT_LE(marginal_ks(q, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }), 1.0 / (M + 1) + 1e-12);
}

TEST(LevyMarginalCdf, MatchesOracles) {
  const auto g = levy_marginal_cdf(LevyTriplet::scalar(0.5, 4.0), 1.0, 1.0);
  ASSERT_TRUE(g);
  EXPECT_NEAR((*g)(1.5), 0.5, 1e-15);
  EXPECT_NEAR((*g)(3.5), normal_cdf(1.0), 1e-14);
  // compensated Poisson, rate 3, jump 0.5: atoms at 0.5 k - 1.5
  const auto p = levy_marginal_cdf(LevyTriplet::scalar(0, 0, LevyMeasure::dirac(0.5, 3.0)), 1.0);
  ASSERT_TRUE(p);
  double cum = 0.0;
  for (int k = 0; k < 12; ++k) {
    const double x = 0.5 * k - 1.5;
    EXPECT_NEAR(p->left(x), cum, 1e-12);
    cum += std::exp(-3.0) * std::pow(3.0, k) / std::tgamma(k + 1.0);
    EXPECT_NEAR(p->right(x), cum, 1e-12);
  }
  LevyMeasure dens(1);
  dens.add_piece({0.5, 1.0, [](double) { return 1.0; }, 16, ""});
  EXPECT_FALSE(levy_marginal_cdf(LevyTriplet::scalar(0, 0, dens), 1.0));
}

TEST(MarginalKs, SimulatedCompoundPoissonMatchesLatticeLaw) {
  const LevyTriplet t = LevyTriplet::scalar(0, 0, LevyMeasure::dirac(0.5, 3.0));
  const auto b = simulate_paths(TripletSchedule::constant(t), Vec::Zero(1), config(100000, 4, 30));
  EXPECT_LE(marginal_ks(b.terminal(), *levy_marginal_cdf(t, 1.0)), 1.95 / std::sqrt(1e5));
}

TEST(Convergence, Examples) {
  TripletSequence seq;
  seq.index_map = scaled_poisson;
  seq.n_schedule = {10, 1e2, 1e3, 1e4};
  const auto rep = convergence_experiment(seq, LevyTriplet::scalar(0, 1), config(100000, 2024), default_cf_grid());
  ASSERT_EQ(rep.rows.size(), 4u);
  EXPECT_TRUE(rep.ks_decreasing);
  EXPECT_LE(*rep.rows.back().ks, 0.02);
  EXPECT_LE(rep.rows.back().cf_distance, 0.03);

  TripletSequence same;
  same.index_map = [](double) { return LevyTriplet::scalar(0, 1); };
  same.n_schedule = {1, 2, 3};
  for (const auto& row : convergence_experiment(same, LevyTriplet::scalar(0, 1), config(100000, 5), default_cf_grid()).rows) {
    EXPECT_LE(*row.ks, 0.01);
    EXPECT_LE(row.cf_distance, 0.01);
  }

  TripletSequence far;
  far.index_map = [](double) { return LevyTriplet::scalar(0, 0, LevyMeasure::dirac(2.0, 1.0)); };
  far.n_schedule = {1, 10, 100};
  for (const auto& row : convergence_experiment(far, LevyTriplet::scalar(0, 1), config(20000, 6), default_cf_grid()).rows)
    EXPECT_GE(*row.ks, 0.3);
}

// ---- properties ----

TEST(SimulateProperties, DeterminismAndWorkerIndependence) {
  rng::Stream s(300, 0);
  for (int i = 0; i < 200; ++i) {
    const LevyTriplet t = levyot::testing::random_atomic_triplet(s, 1 + i % 2);
    SimulationConfig c = config(64, 1000 + i, 5);
    c.epsilon = 0.25;
    const Vec x0 = Vec::Zero(static_cast<Eigen::Index>(t.dim()));
    const PathBundle a = simulate_paths(TripletSchedule::constant(t), x0, c);
    const PathBundle b = simulate_paths(TripletSchedule::constant(t), x0, c);
    c.workers = 1 + i % 7;
    const PathBundle w = simulate_paths(TripletSchedule::constant(t), x0, c);
    ASSERT_EQ(a.values, b.values);
    ASSERT_EQ(a.values, w.values);
  }
}

TEST(SimulateProperties, MartingaleMeanAndVarianceConsistency) {
  // martingale: compensated small atoms plus a large atom balanced by drift
  LevyMeasure F(1);
  F.add_atom(Vec::Constant(1, 0.4), 3.0).add_atom(Vec::Constant(1, -0.2), 5.0).add_atom(Vec::Constant(1, 1.5), 0.8);
  const LevyTriplet t = LevyTriplet::scalar(-0.8 * 0.5, 0.3, F);
  ASSERT_NEAR(martingale_residual(t)[0], 0.0, 1e-15);
  const double target = 0.3 + 3 * 0.16 + 5 * 0.04 + 0.8 * 2.25;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const auto x = simulate_paths(TripletSchedule::constant(t), Vec::Constant(1, 0.7), config(40000, seed, 8)).terminal();
    EXPECT_LE(std::abs(mean(x) - 0.7), 5 * std::sqrt(variance(x) / x.size()));
    EXPECT_NEAR(variance(x), target, 5 * variance_se(x));
  }
}

TEST(SimulateProperties, EpsilonRobustness) {
  LevyMeasure F(1);
  F.add_piece({0.0, 1.0, [](double x) { return 0.5 * std::pow(x, -1.5); }, 64, ""});
  const LevyTriplet t = LevyTriplet::scalar(0, 0, F);
  SimulationConfig c = config(100000, 21, 4);
  c.epsilon = 0.02;
  const auto a = simulate_paths(TripletSchedule::constant(t), Vec::Zero(1), c).terminal();
  c.epsilon = 0.01;
  const auto b = simulate_paths(TripletSchedule::constant(t), Vec::Zero(1), c).terminal();
  EXPECT_LE(std::abs(variance(a) - variance(b)), 2.0 * std::hypot(variance_se(a), variance_se(b)));
}

TEST(SimulateProperties, CfAgreesWithExponent) {
  rng::Stream s(500, 0);
  const std::size_t N = 20000;
  for (int i = 0; i < 10; ++i) {
    const LevyTriplet t = levyot::testing::random_atomic_triplet(s, 1);
    const auto x = simulate_paths(TripletSchedule::constant(t), Vec::Zero(1), config(N, 700 + i)).terminal();
    // |e^{iuX} - E| <= 2, so 3 * 2 / sqrt(N) covers each grid point with margin
    EXPECT_LE(cf_distance(x, t, 1.0, default_cf_grid()), 3.0 * 2.0 / std::sqrt(N));
  }
}
