#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "levyot/triplet.hpp"
#include "test_support.hpp"

using namespace levyot;
using levyot::testing::random_atomic_triplet;

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }
Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

LevyMeasure scaled_poisson(double n) { return LevyMeasure::dirac(1.0 / std::sqrt(n), n); }

}  // namespace

TEST(Truncation, Examples) {
  TruncationRule h1{1}, h2{2};
  EXPECT_DOUBLE_EQ(truncation_apply(h1, v1(0.5))[0], 0.5);
  EXPECT_DOUBLE_EQ(truncation_apply(h1, v1(3.0))[0], 1.0);
  const Vec y = truncation_apply(h2, v2(3, 4));
  EXPECT_NEAR(y[0], 0.6, 1e-15);
  EXPECT_NEAR(y[1], 0.8, 1e-15);
  EXPECT_THROW(truncation_apply(h1, v2(1, 1)), ValidationError);
}

TEST(Truncation, BoundedAndLipschitz) {
  rng::Stream s(101, 0);
  TruncationRule h{3};
  for (int k = 0; k < 500; ++k) {
    Vec x(3), y(3);
    for (int i = 0; i < 3; ++i) {
      x[i] = levyot::testing::uniform(s, -4, 4);
      y[i] = levyot::testing::uniform(s, -4, 4);
    }
    const Vec hx = h.apply(x), hy = h.apply(y);
    EXPECT_LE(hx.norm(), 1.0 + 1e-15);
    EXPECT_LE((hx - hy).norm(), (x - y).norm() + 1e-12);
    if (x.norm() <= 1.0) { EXPECT_EQ(hx, x); }
  }
}

TEST(LevyTripletType, ValidatesShapeAndDefiniteness) {
  EXPECT_THROW(LevyTriplet(v2(0, 0), Mat::Zero(1, 1), LevyMeasure(1)), ValidationError);
  Mat asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  EXPECT_THROW(LevyTriplet(v2(0, 0), asym, LevyMeasure(2)), ValidationError);
  Mat neg(2, 2);
  neg << 1, 2, 2, 1;
  EXPECT_THROW(LevyTriplet(v2(0, 0), neg, LevyMeasure(2)), ValidationError);
  EXPECT_THROW(LevyMeasure::dirac(0.0, 1.0), ValidationError);
  EXPECT_THROW(LevyMeasure::dirac(1.0, -1.0), ValidationError);
  EXPECT_TRUE(LevyMeasure::dirac(1.0, 0.0).empty());
}

TEST(LevyMeasureType, DensityPieceRules) {
  LevyMeasure F(1);
  EXPECT_THROW(F.add_piece({-1.0, 1.0, [](double) { return 1.0; }, 16, ""}), ValidationError);
  EXPECT_THROW(F.add_piece({0.5, 1.0, [](double) { return 1.0; }, 4, ""}), ValidationError);
  EXPECT_THROW(F.add_piece({0.5, 1.0, [](double) { return -1.0; }, 16, ""}), ValidationError);
  // |x|^{-4} near 0: integral of x^2 diverges
  EXPECT_THROW(F.add_piece({0.0, 1.0, [](double x) { return std::pow(std::abs(x), -4.0); }, 16, ""}),
               QuadratureError);
  // |x|^{-1.5}: integral of x^2 converges
  EXPECT_NO_THROW(F.add_piece({0.0, 1.0, [](double x) { return std::pow(std::abs(x), -1.5); }, 64, ""}));
  EXPECT_EQ(F.pieces().size(), 1u);
  LevyMeasure G(1);
  G.add_atom(v1(2.0), 1.0);
  try {
    G.add_piece({0.5, 1.0, [](double x) { return x > 0.75 ? std::nan("") : 1.0; }, 16, ""});
    FAIL();
  } catch (const QuadratureError& e) {
    EXPECT_EQ(e.piece(), 0u);
  }
  EXPECT_TRUE(G.pieces().empty());
}

TEST(ConditionB, Examples) {
  for (double n : {1.0, 4.0, 100.0, 1e6})
    EXPECT_NEAR(condition_b_value(LevyTriplet::scalar(0, 0, scaled_poisson(n))), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(condition_b_value(LevyTriplet::scalar(0, 1)), 1.0);
  EXPECT_DOUBLE_EQ(condition_b_value(LevyTriplet::scalar(1, 0, LevyMeasure::dirac(2.0, 2.0))), 5.0);
}

TEST(ConditionB, DensityMatchesSimpsonOracle) {
  // F(dx) = exp(-|x|) / |x|^0.5 on [-3, -0.2] and [0.2, 3]
  auto dens = [](double x) { return std::exp(-std::abs(x)) / std::sqrt(std::abs(x)); };
  LevyMeasure F(1);
  F.add_piece({-3.0, -0.2, dens, 64, ""});
  F.add_piece({0.2, 3.0, dens, 64, ""});
  const double got = condition_b_value(LevyTriplet::scalar(0.5, 0.25, F));
  auto integrand = [&](double x) { return dens(x) * std::min(x * x, std::abs(x)); };
  const double oracle = 0.5 + 0.25 + levyot::testing::simpson(integrand, -3, -1) +
                        levyot::testing::simpson(integrand, -1, -0.2) + levyot::testing::simpson(integrand, 0.2, 1) +
                        levyot::testing::simpson(integrand, 1, 3);
  EXPECT_NEAR(got, oracle, 1e-10);
}

TEST(SmallJumps, Examples) {
  const double n = 400.0;
  EXPECT_NEAR(small_jump_second_moment(scaled_poisson(n), 0.05), 1.0, 1e-14);
  EXPECT_NEAR(small_jump_second_moment(scaled_poisson(n), 1.0), 1.0, 1e-14);
  EXPECT_EQ(small_jump_second_moment(scaled_poisson(n), 0.049), 0.0);
  EXPECT_EQ(small_jump_second_moment(LevyMeasure::dirac(2.0, 1.0), 1.0), 0.0);
  EXPECT_THROW(small_jump_second_moment(scaled_poisson(n), 0.0), ValidationError);
}

TEST(SmallJumps, DensityRestrictedToBall) {
  LevyMeasure F(1);
  F.add_piece({0.0, 2.0, [](double x) { return std::pow(x, -2.5); }, 64, ""});
  // x^2 * x^{-2.5} = x^{-1/2}; integral over (0, 0.5] = 2 sqrt(0.5)
  EXPECT_NEAR(small_jump_second_moment(F, 0.5), 2.0 * std::sqrt(0.5), 2e-2);
  EXPECT_NEAR(small_jump_second_moment(F, 0.5) / small_jump_second_moment(F, 0.125), 2.0, 1e-6);
}

TEST(ModifiedTriplet, Examples) {
  const LevyTriplet a = modified_triplet(LevyTriplet::scalar(0, 0, scaled_poisson(1e4)));
  EXPECT_NEAR(a.c()(0, 0), 1.0, 1e-12);
  EXPECT_EQ(a.b()[0], 0.0);
  const LevyTriplet b = modified_triplet(LevyTriplet::scalar(0, 1));
  EXPECT_EQ(b.c()(0, 0), 1.0);
  EXPECT_TRUE(b.F().empty());
  const double lam = 3.0;
  const LevyTriplet c = modified_triplet(LevyTriplet::scalar(0, 0, LevyMeasure::dirac(0.5, lam)));
  EXPECT_DOUBLE_EQ(c.c()(0, 0), 0.25 * lam);
  EXPECT_EQ(c.F().atoms().size(), 1u);
}

TEST(LevyExponent, Examples) {
  EXPECT_EQ(levy_exponent(LevyTriplet::scalar(0, 1), 2.0), Complex(-2.0, 0.0));
  EXPECT_EQ(levy_exponent(LevyTriplet::scalar(1, 0), 3.0), Complex(0.0, 3.0));
  const double lam = 2.0;
  const Complex got = levy_exponent(LevyTriplet::scalar(0, 0, LevyMeasure::dirac(0.5, lam)), 1.0);
  const Complex oracle = lam * (std::exp(Complex(0, 0.5)) - 1.0 - Complex(0, 0.5));
  EXPECT_NEAR(got.real(), oracle.real(), 1e-15);
  EXPECT_NEAR(got.imag(), oracle.imag(), 1e-15);
  EXPECT_NEAR(got.real() / lam, -0.1224, 1e-4);
  EXPECT_NEAR(got.imag() / lam, -0.0206, 1e-4);
}

TEST(LevyExponent, SmallJumpCancellationIsStable) {
  // n (e^{i/sqrt n} - 1 - i/sqrt n) -> -1/2 with imaginary part ~ -1/(6 sqrt n)
  const double n = 1e10;
  const Complex psi = levy_exponent(LevyTriplet::scalar(0, 0, scaled_poisson(n)), 1.0);
  EXPECT_NEAR(psi.real(), -0.5 + 1.0 / (24.0 * n), 1e-9);
  EXPECT_NEAR(psi.imag(), -1.0 / (6.0 * std::sqrt(n)), 1e-12);
}

TEST(Generator, Examples) {
  TestFunction sq{[](const Vec& x) { return x[0] * x[0]; }, [](const Vec& x) { return Vec(2.0 * x); },
                  [](const Vec&) { return Mat(Mat::Constant(1, 1, 2.0)); }};
  TestFunction id{[](const Vec& x) { return x[0]; }, [](const Vec&) { return Vec(Vec::Ones(1)); },
                  [](const Vec&) { return Mat(Mat::Zero(1, 1)); }};
  for (double x : {-2.0, 0.0, 3.5}) EXPECT_DOUBLE_EQ(generator_apply(LevyTriplet::scalar(0, 1), sq, v1(x)), 1.0);
  EXPECT_DOUBLE_EQ(generator_apply(LevyTriplet::scalar(1, 0), id, v1(0.3)), 1.0);
  const double lam = 1.7;
  EXPECT_NEAR(generator_apply(LevyTriplet::scalar(0, 0, LevyMeasure::dirac(0.5, lam)), sq, v1(1.3)), 0.25 * lam,
              1e-14);
  TestFunction bad{[](const Vec& x) { return x[0] > 1 ? std::nan("") : 0.0; },
                   [](const Vec&) { return Vec(Vec::Zero(1)); }, [](const Vec&) { return Mat(Mat::Zero(1, 1)); }};
  EXPECT_THROW(generator_apply(LevyTriplet::scalar(0, 0, LevyMeasure::dirac(2.0, 1.0)), bad, v1(0.0)),
               NumericalError);
}

TEST(MartingaleResidual, Examples) {
  LevyMeasure inner(1);
  inner.add_atom(v1(0.5), 2.0).add_atom(v1(-1.0), 1.0);
  EXPECT_EQ(martingale_residual(LevyTriplet::scalar(0, 0, inner))[0], 0.0);
  EXPECT_EQ(martingale_residual(LevyTriplet::scalar(-1, 0, LevyMeasure::dirac(2.0, 1.0)))[0], 0.0);
  EXPECT_EQ(martingale_residual(LevyTriplet::scalar(1, 0))[0], 1.0);
}

TEST(Features, Examples) {
  FeatureMapConfig cfg{1, {}};
  EXPECT_EQ(measure_features(LevyMeasure::dirac(2.0, 1.0), cfg), std::vector<double>{1.0});
  EXPECT_EQ(measure_features(LevyMeasure::dirac(0.25, 1.0), cfg), std::vector<double>{0.0});
  FeatureMapConfig wide{4, {v1(1.0), v1(-2.5)}};
  for (double f : measure_features(LevyMeasure(1), wide)) EXPECT_EQ(f, 0.0);
  EXPECT_EQ(measure_features(LevyMeasure(1), wide).size(), 8u);
  EXPECT_THROW(measure_features(LevyMeasure(1), FeatureMapConfig{0, {}}), ValidationError);
  EXPECT_THROW(measure_features(LevyMeasure(1), FeatureMapConfig{1, {v1(0.0)}}), ValidationError);
}

// ---- randomized properties, fixed seeds, >= 200 cases each ----

TEST(Properties, ExponentGeneratorConsistency) {
  rng::Stream s(2024, 0);
  for (int k = 0; k < 300; ++k) {
    const std::size_t d = 1 + k % 2;
    const LevyTriplet t = random_atomic_triplet(s, d);
    Vec u(d);
    for (std::size_t i = 0; i < d; ++i) u[i] = levyot::testing::uniform(s, -3, 3);
    TestFunction cosf{[u](const Vec& x) { return std::cos(u.dot(x)); },
                      [u](const Vec& x) { return Vec(-std::sin(u.dot(x)) * u); },
                      [u](const Vec& x) { return Mat(-std::cos(u.dot(x)) * u * u.transpose()); }};
    TestFunction sinf{[u](const Vec& x) { return std::sin(u.dot(x)); },
                      [u](const Vec& x) { return Vec(std::cos(u.dot(x)) * u); },
                      [u](const Vec& x) { return Mat(-std::sin(u.dot(x)) * u * u.transpose()); }};
    const Complex psi = levy_exponent(t, u);
    const Vec zero = Vec::Zero(d);
    EXPECT_NEAR(generator_apply(t, cosf, zero), psi.real(), 1e-8);
    EXPECT_NEAR(generator_apply(t, sinf, zero), psi.imag(), 1e-8);
  }
}

TEST(Properties, ExponentSymmetryAndSign) {
  rng::Stream s(77, 0);
  for (int k = 0; k < 300; ++k) {
    const std::size_t d = 1 + k % 2;
    const LevyTriplet t = random_atomic_triplet(s, d);
    EXPECT_EQ(levy_exponent(t, Vec(Vec::Zero(d))), Complex(0.0, 0.0));
    Vec u(d);
    for (std::size_t i = 0; i < d; ++i) u[i] = levyot::testing::uniform(s, -10, 10);
    const Complex p = levy_exponent(t, u), q = levy_exponent(t, Vec(-u));
    EXPECT_NEAR(std::abs(q - std::conj(p)), 0.0, 1e-12 * (1 + std::abs(p)));
    EXPECT_LE(p.real(), 1e-12);
  }
}

TEST(Properties, ModifiedTripletCorrectionIsPsd) {
  rng::Stream s(5, 0);
  for (int k = 0; k < 250; ++k) {
    const std::size_t d = 1 + k % 3;
    const LevyTriplet t = random_atomic_triplet(s, d);
    const LevyTriplet m = modified_triplet(t);
    EXPECT_GE(min_eigenvalue(m.c() - t.c()), -1e-10);
    EXPECT_EQ(m.b(), t.b());
    ASSERT_EQ(m.F().atoms().size(), t.F().atoms().size());
    for (std::size_t i = 0; i < t.F().atoms().size(); ++i) {
      EXPECT_EQ(m.F().atoms()[i].x, t.F().atoms()[i].x);
      EXPECT_EQ(m.F().atoms()[i].w, t.F().atoms()[i].w);
    }
  }
}

TEST(Properties, SmallJumpMomentMonotoneAndBounded) {
  rng::Stream s(9, 0);
  for (int k = 0; k < 250; ++k) {
    const LevyTriplet t = random_atomic_triplet(s, 1 + k % 2);
    const LevyTriplet pure(Vec::Zero(t.dim()), Mat::Zero(t.dim(), t.dim()), t.F());
    const double cap = condition_b_value(pure);
    double prev = 0.0;
    for (double delta : {0.05, 0.1, 0.3, 0.7, 1.0, 2.0, 5.0}) {
      const double v = small_jump_second_moment(t.F(), delta);
      EXPECT_GE(v, prev);
      if (delta <= 1.0) { EXPECT_LE(v, cap + 1e-12); }
      prev = v;
    }
  }
}

TEST(Properties, FeatureLinearityAndSeparation) {
  rng::Stream s(31, 0);
  FeatureMapConfig cfg{6, {v1(0.5), v1(1.0), v1(2.0), v1(-3.0)}};
  for (int k = 0; k < 250; ++k) {
    const LevyMeasure F = random_atomic_triplet(s, 1).F();
    LevyMeasure G(1);
    G.add_piece({0.2, 1.5, [](double x) { return 1.0 / (x * x); }, 16, ""});
    G.add_atom(v1(levyot::testing::uniform(s, -2, -0.1)), levyot::testing::uniform(s, 0.1, 2));
    const double a = levyot::testing::uniform(s, 0, 3), b = levyot::testing::uniform(s, 0, 3);
    const auto fF = measure_features(F, cfg), fG = measure_features(G, cfg);
    const auto fC = measure_features(F.combined(a, G, b), cfg);
    for (std::size_t i = 0; i < fC.size(); ++i) EXPECT_NEAR(fC[i], a * fF[i] + b * fG[i], 1e-10);

    const double x1 = levyot::testing::uniform(s, 0.2, 3.0) * (s.uniform() < 0.5 ? -1 : 1);
    double x2 = levyot::testing::uniform(s, 0.2, 3.0);
    if (std::abs(x2 - x1) < 1e-3) x2 += 0.1;
    const double w1 = levyot::testing::uniform(s, 0.1, 2), w2 = w1 + levyot::testing::uniform(s, 0.05, 1);
    EXPECT_NE(measure_features(LevyMeasure::dirac(x1, w1), cfg), measure_features(LevyMeasure::dirac(x2, w2), cfg));
  }
}
