#include <gtest/gtest.h>

#include <cmath>

#include "levyot/limit_lab.hpp"
#include "test_support.hpp"

using namespace levyot;

namespace {

LevyTriplet scaled_poisson(double n) { return LevyTriplet::scalar(0, 0, LevyMeasure::dirac(1.0 / std::sqrt(n), n)); }

TripletSequence scaled_poisson_sequence() {
  TripletSequence s;
  s.index_map = scaled_poisson;
  return s;
}

TripletSequence constant_sequence(LevyTriplet t) {
  TripletSequence s;
  s.index_map = [t](double) { return t; };
  return s;
}

std::vector<Vec> grid(std::initializer_list<double> us) {
  std::vector<Vec> g;
  for (double u : us) g.push_back(Vec::Constant(1, u));
  return g;
}

ThetaFamily scaled_poisson_family() {
  return ThetaFamily({{"n", 1.0, 1e6}}, [](std::span<const double> p) { return scaled_poisson(p[0]); });
}

ThetaFamily balanced_family() {
  return ThetaFamily({{"s", 0.0, 1.0}, {"a", 1e-3, 1.0}}, [](std::span<const double> p) {
    return LevyTriplet::scalar(0, 1.0 - p[0], LevyMeasure::dirac(p[1], p[0] / (p[1] * p[1])));
  });
}

}  // namespace

TEST(ExponentLimit, ScaledPoissonTendsToGaussian) {
  const auto prof = exponent_limit_profile(scaled_poisson_sequence(), grid({1.0}));
  ASSERT_EQ(prof.size(), 1u);
  const auto& e = prof[0];
  for (std::size_t i = 0; i < e.values.size(); ++i)
    EXPECT_LE(std::abs(e.values[i] + 0.5), 1.0 / (6.0 * std::sqrt(scaled_poisson_sequence().n_schedule[i])));
  EXPECT_TRUE(e.cauchy);
  EXPECT_NEAR(e.limit.real(), -0.5, 1e-7);
  EXPECT_NEAR(e.limit.imag(), 0.0, 1e-6);
  EXPECT_LE(e.error, 1.0 / (6.0 * std::sqrt(1e4)));
}

TEST(ExponentLimit, ConstantAndVanishingDrift) {
  for (const auto& e : exponent_limit_profile(constant_sequence(LevyTriplet::scalar(0, 1)), grid({-3, 0.5, 2}))) {
    for (Complex v : e.values) EXPECT_EQ(v, Complex(-0.5 * e.u[0] * e.u[0], 0.0));
    EXPECT_EQ(e.limit, Complex(-0.5 * e.u[0] * e.u[0], 0.0));
    EXPECT_EQ(e.error, 0.0);
  }
  TripletSequence drift;
  drift.index_map = [](double n) { return LevyTriplet::scalar(1.0 / n, 0); };
  const auto e = exponent_limit_profile(drift, grid({1.0}))[0];
  EXPECT_NEAR(std::abs(e.limit), 0.0, 1e-5);
  EXPECT_THROW(exponent_limit_profile(drift, {}), ValidationError);
}

TEST(ExponentLimit, FlagsNonCauchySequences) {
  TripletSequence grow;
  grow.index_map = [](double n) { return LevyTriplet::scalar(std::log10(n), 0); };
  EXPECT_FALSE(exponent_limit_profile(grow, grid({1.0}))[0].cauchy);
}

TEST(DiffusionCreation, Examples) {
  const auto a = diffusion_creation_diagnostic(scaled_poisson_sequence(), default_delta_schedule(), 1.0);
  EXPECT_NEAR(a.estimate, 1.0, 1e-12);
  EXPECT_EQ(a.verdict, LimitVerdict::DiffusionCreated);
  const auto b = diffusion_creation_diagnostic(constant_sequence(LevyTriplet::scalar(0, 0, LevyMeasure::dirac(2.0, 1.0))),
                                               {1.5, 1.0, 0.5}, 1.0);
  EXPECT_EQ(b.estimate, 0.0);
  EXPECT_EQ(b.verdict, LimitVerdict::PurelyDiscontinuous);
  TripletSequence slow;
  slow.index_map = [](double n) {
    return LevyTriplet::scalar(0, 0, LevyMeasure::dirac(1.0 / std::sqrt(n), std::pow(n, 0.25)));
  };
  const auto c = diffusion_creation_diagnostic(slow, default_delta_schedule(), 1.0);
  EXPECT_LE(c.estimate, kTolD);
  EXPECT_GE(c.estimate, 0.0);
  EXPECT_EQ(c.verdict, LimitVerdict::PurelyDiscontinuous);
  const auto twice = diffusion_creation_diagnostic(scaled_poisson_sequence(), default_delta_schedule(), 2.0);
  EXPECT_NEAR(twice.estimate, 2.0, 1e-12);
}

TEST(Identify, Examples) {
  const auto sp = limit_triplet_identify(exponent_limit_profile(scaled_poisson_sequence(), default_fit_grid()), {});
  EXPECT_NEAR(sp.triplet.b()[0], 0.0, 0.02);
  EXPECT_NEAR(sp.triplet.c()(0, 0), 1.0, 0.05);
  EXPECT_TRUE(sp.triplet.F().empty());
  EXPECT_LE(sp.fit_residual, 0.05);

  const auto drift =
      limit_triplet_identify(exponent_limit_profile(constant_sequence(LevyTriplet::scalar(0.3, 0)), default_fit_grid()), {});
  EXPECT_NEAR(drift.triplet.b()[0], 0.3, 1e-12);
  EXPECT_NEAR(drift.triplet.c()(0, 0), 0.0, 1e-12);
  EXPECT_LE(drift.fit_residual, 1e-10);

  const auto atom = limit_triplet_identify(
      exponent_limit_profile(constant_sequence(LevyTriplet::scalar(0, 0, LevyMeasure::dirac(1.0, 2.0))), default_fit_grid()),
      LimitStructure{{1.0}});
  ASSERT_EQ(atom.triplet.F().atoms().size(), 1u);
  EXPECT_NEAR(atom.triplet.F().atoms()[0].w, 2.0, 1e-10);
  EXPECT_LE(atom.fit_residual, 1e-8);

  EXPECT_THROW(limit_triplet_identify(exponent_limit_profile(scaled_poisson_sequence(), grid({1.0})), {}), ValidationError);
}

TEST(Closedness, Examples) {
  TripletSequence seq = scaled_poisson_sequence();
  seq.params = [](double n) { return std::vector<double>{n}; };
  const auto no = closedness_probe(scaled_poisson_family(), seq, false);
  EXPECT_EQ(no.limit_in_set, Membership::No);
  EXPECT_GE(no.witness.residual, 0.5);

  seq.params = [](double n) { return std::vector<double>{1.0, 1.0 / std::sqrt(n)}; };
  const auto yes = closedness_probe(balanced_family(), seq, true);
  EXPECT_EQ(yes.limit_in_set, Membership::Yes);
  EXPECT_NEAR(yes.limit.c()(0, 0), 1.0, 1e-6);
  EXPECT_LE(yes.witness.residual, 1e-6);

  ThetaFamily diff({{"c", 0.0, 4.0}}, [](std::span<const double> p) { return LevyTriplet::scalar(0, p[0]); });
  const auto constant = closedness_probe(diff, constant_sequence(LevyTriplet::scalar(0, 2.5)), false);
  EXPECT_EQ(constant.limit_in_set, Membership::Yes);
  EXPECT_NEAR(constant.witness.params[0], 2.5, 1e-6);
}

TEST(Closedness, RejectsSequencesOutsideTheFamily) {
  ThetaFamily diff({{"c", 0.0, 1.0}}, [](std::span<const double> p) { return LevyTriplet::scalar(0, p[0]); });
  EXPECT_THROW(closedness_probe(diff, constant_sequence(LevyTriplet::scalar(0, 2.5)), false), ValidationError);
}

// ---- properties on random atomic sequences ----

namespace {
// (0, c0, n delta_{a/sqrt n} * k + w delta_x): created diffusion k a^2 next to a fixed atom.
struct RandomSeq {
  double c0, k, a, w, x;
  TripletSequence seq() const {
    TripletSequence s;
    RandomSeq r = *this;
    s.index_map = [r](double n) {
      LevyMeasure F(1);
      F.add_atom(Vec::Constant(1, r.a / std::sqrt(n)), r.k * n).add_atom(Vec::Constant(1, r.x), r.w);
      return LevyTriplet::scalar(0, r.c0, F);
    };
    return s;
  }
};

RandomSeq draw(rng::Stream& s) {
  using levyot::testing::uniform;
  return {uniform(s, 0, 1), uniform(s, 0, 2), uniform(s, 0.2, 1.0), uniform(s, 0.1, 2), uniform(s, 1.2, 3)};
}
}  // namespace

TEST(LimitProperties, TwoRoutesToCreatedDiffusionAgree) {
  rng::Stream s(404, 0);
  for (int i = 0; i < 40; ++i) {
    const RandomSeq r = draw(s);
    const TripletSequence seq = r.seq();
    const auto diag = diffusion_creation_diagnostic(seq, {0.05, 0.02, 0.01}, 1.0);
    const auto id = limit_triplet_identify(exponent_limit_profile(seq, default_fit_grid()), LimitStructure{{r.x}});
    EXPECT_NEAR(diag.estimate, id.triplet.c()(0, 0) - r.c0, 0.05);
    EXPECT_NEAR(diag.estimate, r.k * r.a * r.a, 1e-9);
  }
}

TEST(LimitProperties, DeltaProfileMonotoneForEachN) {
  rng::Stream s(405, 0);
  for (int i = 0; i < 40; ++i) {
    const auto diag = diffusion_creation_diagnostic(draw(s).seq(), {2.0, 0.5, 0.1, 0.05, 0.02, 0.01, 0.005}, 1.0);
    for (std::size_t j = 0; j < diag.table[0].size(); ++j)
      for (std::size_t d = 1; d < diag.deltas.size(); ++d) EXPECT_LE(diag.table[d][j], diag.table[d - 1][j]);
  }
}

TEST(LimitProperties, ConstantSequencesAreFixedPoints) {
  rng::Stream s(406, 0);
  using levyot::testing::uniform;
  for (int i = 0; i < 40; ++i) {
    const double x1 = uniform(s, 0.1, 0.9), x2 = -uniform(s, 1.1, 3.0);
    LevyMeasure F(1);
    F.add_atom(Vec::Constant(1, x1), uniform(s, 0.1, 3)).add_atom(Vec::Constant(1, x2), uniform(s, 0.1, 3));
    const LevyTriplet t = LevyTriplet::scalar(uniform(s, -1, 1), uniform(s, 0, 2), F);
    const TripletSequence seq = constant_sequence(t);
    const auto id = limit_triplet_identify(exponent_limit_profile(seq, default_fit_grid()), LimitStructure{{x1, x2}});
    EXPECT_NEAR(id.triplet.b()[0], t.b()[0], 1e-8);
    EXPECT_NEAR(id.triplet.c()(0, 0), t.c()(0, 0), 1e-8);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(id.triplet.F().atoms()[j].w, t.F().atoms()[j].w, 1e-8);
    EXPECT_LE(diffusion_creation_diagnostic(seq, {0.09, 0.05, 0.02}, 1.0).estimate, 1e-8);
  }
}

TEST(LimitProperties, UMapCommutesWithLimits) {
  // c~ of the identified limit equals the limit of the modified second characteristics c~_n
  rng::Stream s(407, 0);
  for (int i = 0; i < 40; ++i) {
    const RandomSeq r = draw(s);
    const TripletSequence seq = r.seq();
    const auto a = limit_triplet_identify(exponent_limit_profile(seq, default_fit_grid()), LimitStructure{{r.x}});
    std::vector<double> ctilde;
    for (double n : seq.n_schedule) ctilde.push_back(modified_triplet(seq.at(n)).c()(0, 0));
    for (std::size_t j = 1; j < ctilde.size(); ++j) EXPECT_NEAR(ctilde[j], ctilde[0], 1e-9);
    EXPECT_NEAR(modified_triplet(a.triplet).c()(0, 0), ctilde.back(), 0.05 + a.fit_residual);
    EXPECT_NEAR(modified_triplet(a.triplet).b()[0], a.triplet.b()[0], 0.0);
  }
}
