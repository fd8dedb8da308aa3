#include <gtest/gtest.h>

#include <cmath>

#include "obflip/irwin_hall.hpp"
#include "obflip/volume.hpp"

using namespace obflip;

// Reference values from tests/oracles/irwin_hall_oracle.py (60-digit mpmath quadrature).
struct PdRow {
  int d;
  double p;
};
constexpr PdRow kPdOracle[] = {
    {1, 0.25},
    {2, 0.30277777777777778},
    {5, 0.36404390298487521},
    {6, 0.37454772946960447},
    {7, 0.38293833587667293},
    {8, 0.38984155803223632},
    {9, 0.39565091916074064},
    {10, 0.40062798458488419},
    {20, 0.42848731797073273},
};
// Same integral with the normal approximation N(n/2, n/12) for the Irwin-Hall(2d) CDF.
constexpr PdRow kPdNormalOracle[] = {
    {21, 0.42991392003528265},
    {50, 0.45420815921345872},
    {100, 0.46752380264506873},
    {500, 0.48544142049402805},
};

TEST(IrwinHall, UniformIsExact) {
  double worst = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    worst = std::max(worst, std::abs(irwin_hall_cdf(IrwinHallSpec(1), x) - x));
  }
  EXPECT_LT(worst, 1e-12);
  EXPECT_DOUBLE_EQ(irwin_hall_cdf(IrwinHallSpec(1), 0.3), 0.3);
}

TEST(IrwinHall, SmallClosedForms) {
  EXPECT_NEAR(irwin_hall_cdf(IrwinHallSpec(2), 1.0), 0.5, 1e-15);
  EXPECT_NEAR(irwin_hall_cdf(IrwinHallSpec(2), 0.5), 0.125, 1e-15);
  EXPECT_NEAR(irwin_hall_cdf(IrwinHallSpec(12), 6.0), 0.5, 1e-14);
  EXPECT_NEAR(irwin_hall_cdf(IrwinHallSpec(6), 2.2), 0.13259022222222228, 1e-14);
  EXPECT_NEAR(irwin_hall_cdf(IrwinHallSpec(40), 17.3), 0.069793929718028539, 1e-13);
  EXPECT_NEAR(irwin_hall_cdf(IrwinHallSpec(80), 38.0), 0.21963338709689004, 1e-12);
}

TEST(IrwinHall, OutsideSupport) {
  for (int n : {1, 3, 40, 300}) {
    EXPECT_EQ(irwin_hall_cdf(IrwinHallSpec(n), -0.5), 0.0);
    EXPECT_EQ(irwin_hall_cdf(IrwinHallSpec(n), 0.0), 0.0);
    EXPECT_EQ(irwin_hall_cdf(IrwinHallSpec(n), static_cast<double>(n)), 1.0);
    EXPECT_EQ(irwin_hall_cdf(IrwinHallSpec(n), n + 1.0), 1.0);
  }
  EXPECT_THROW(IrwinHallSpec{0}, Error);
}

TEST(IrwinHall, CdfAxioms) {
  for (int n : {1, 2, 3, 6, 12, 20, 40}) {
    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double x = n * i / 1000.0;
      const double f = irwin_hall_cdf(IrwinHallSpec(n), x);
      EXPECT_GE(f, prev) << "n=" << n << " x=" << x;
      EXPECT_NEAR(f + irwin_hall_cdf(IrwinHallSpec(n), n - x), 1.0, 1e-9) << "n=" << n << " x=" << x;
      prev = f;
    }
  }
}

TEST(IrwinHall, MonotoneForLargeExactN) {
  for (int n : {80, 160, 240}) {
    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double f = irwin_hall_cdf(IrwinHallSpec(n), n * i / 1000.0);
      ASSERT_GE(f, prev) << "n=" << n << " i=" << i;
      prev = f;
    }
  }
}

TEST(IrwinHallApprox, CenterAndSmallN) {
  for (int n : {1, 2, 7, 80, 1000}) EXPECT_NEAR(irwin_hall_cdf_approx(IrwinHallSpec(n), n / 2.0), 0.5, 1e-15);
  EXPECT_NEAR(irwin_hall_cdf_approx(IrwinHallSpec(2), 1.0), irwin_hall_cdf(IrwinHallSpec(2), 1.0), 1e-15);
}

TEST(IrwinHallApprox, N80AgainstSimulationOracle) {
  // 1e7-draw uniform-sum simulation gave F_80(38) = 0.219593.
  EXPECT_LT(std::abs(0.219593 - irwin_hall_cdf_approx(IrwinHallSpec(80), 38.0)), 0.005);
  EXPECT_NEAR(irwin_hall_cdf_approx(IrwinHallSpec(80), 38.0), 0.21928901304049993, 1e-12);
}

TEST(UnexplainedFraction, MatchesOracle) {
  for (const auto& row : kPdOracle) {
    const auto v = unexplained_flip_fraction(row.d);
    EXPECT_NEAR(v.fraction, row.p, 1e-6) << "d=" << row.d;
    EXPECT_EQ(v.method, VolumeMethod::Exact);
  }
  for (const auto& row : kPdNormalOracle) {
    const auto v = unexplained_flip_fraction(row.d);
    EXPECT_NEAR(v.fraction, row.p, 1e-6) << "d=" << row.d;
    EXPECT_EQ(v.method, VolumeMethod::NormalApprox);
  }
}

TEST(UnexplainedFraction, D1IsOneQuarter) { EXPECT_NEAR(unexplained_flip_fraction(1).fraction, 0.25, 1e-10); }

TEST(UnexplainedFraction, D10BetweenFortyAndFiftyPercent) {
  const double p = unexplained_flip_fraction(10).fraction;
  EXPECT_GT(p, 0.40);
  EXPECT_LT(p, 0.5);
}

TEST(UnexplainedFraction, SampledIncreaseTowardHalf) {
  const double p1 = unexplained_flip_fraction(1).fraction;
  const double p20 = unexplained_flip_fraction(20).fraction;
  const double p500 = unexplained_flip_fraction(500).fraction;
  EXPECT_GT(p20, p1);
  EXPECT_GT(p500, p20);
  EXPECT_LT(p500, 0.5);
}

TEST(UnexplainedFraction, ExactMaxNOverride) {
  VolumeOptions opts;
  opts.exact_max_n = 240;
  const auto v = unexplained_flip_fraction(50, opts);
  EXPECT_EQ(v.method, VolumeMethod::Exact);
  // The exact and approximate routes differ only by the CLT error.
  EXPECT_NEAR(v.fraction, kPdNormalOracle[1].p, 2e-3);
}

TEST(UnexplainedFraction, RejectsNonPositiveD) { EXPECT_THROW(unexplained_flip_fraction(0), Error); }

TEST(ExplainedFraction, IsOneHalf) { EXPECT_EQ(explained_flip_fraction().fraction, 0.5); }

TEST(MonteCarlo, ExplainedHalfForAnyM) {
  for (double M : {1.0, 100.0}) {
    const auto v = monte_carlo_flip_fraction(3, M, Component::Explained, true, 1'000'000, 17);
    EXPECT_LT(std::abs(v.fraction - 0.5), 3 * std::sqrt(0.25 / 1e6)) << "M=" << M;
  }
}

TEST(MonteCarlo, D5ExplainedAndUnexplained) {
  const auto e = monte_carlo_flip_fraction(5, 1.0, Component::Explained, true, 1'000'000, 19);
  EXPECT_LT(std::abs(e.fraction - 0.5), 3 * std::sqrt(0.25 / 1e6));
  const double p5 = unexplained_flip_fraction(5).fraction;
  const auto u = monte_carlo_flip_fraction(5, 1.0, Component::Unexplained, true, 1'000'000, 19);
  EXPECT_LT(std::abs(u.fraction - p5), 3 * std::sqrt(p5 * (1 - p5) / 1e6));
}

TEST(MonteCarlo, AgreesWithQuadrature) {
  for (int d : {1, 2, 5, 10, 20}) {
    const double p = unexplained_flip_fraction(d).fraction;
    const auto v = monte_carlo_flip_fraction(d, 1.0, Component::Unexplained, true, 1'000'000, 1000 + d);
    EXPECT_LT(std::abs(v.fraction - p), 3 * std::sqrt(p * (1 - p) / 1e6)) << "d=" << d;
  }
}

TEST(MonteCarlo, UnstandardizedHighDimension) {
  const auto v = monte_carlo_flip_fraction(50, 100.0, Component::Unexplained, false, 1'000'000, 23);
  EXPECT_GT(v.fraction, 0.4);
  EXPECT_LT(v.fraction, 0.5);
}

TEST(MonteCarlo, MInvarianceWhenStandardized) {
  for (Component c : {Component::Explained, Component::Unexplained}) {
    const auto a = monte_carlo_flip_fraction(4, 1.0, c, true, 200'000, 29);
    const auto b = monte_carlo_flip_fraction(4, 1000.0, c, true, 200'000, 31);
    const double se = std::sqrt(a.standard_error * a.standard_error + b.standard_error * b.standard_error);
    EXPECT_LT(std::abs(a.fraction - b.fraction), 3 * se);
  }
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResult) {
  const auto one = monte_carlo_flip_fraction(6, 2.0, Component::Unexplained, false, 50'000, 37, {1});
  const auto four = monte_carlo_flip_fraction(6, 2.0, Component::Unexplained, false, 50'000, 37, {4});
  EXPECT_EQ(one.flips, four.flips);
  EXPECT_EQ(one.fraction, four.fraction);
}

TEST(MonteCarlo, RejectsTooFewDraws) {
  try {
    monte_carlo_flip_fraction(2, 1.0, Component::Explained, true, 999, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidDrawCount);
  }
}
