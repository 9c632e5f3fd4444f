#include <gtest/gtest.h>

#include <cmath>

#include "xps/errors.hpp"
#include "xps/photon_inference.hpp"

using namespace xps;

namespace {

CoherentSource src(double a) { return {a, 40e-9, 0.0}; }
DetectorModel det(double eta, double bg, bool resolving = false) { return {eta, bg, resolving}; }

}  // namespace

TEST(PoissonPmf, KnownValues) {
  EXPECT_NEAR(poisson_pmf(3, 0.5), 0.01263605541067986299, 1e-17);
  EXPECT_DOUBLE_EQ(poisson_pmf(0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(poisson_pmf(2, 0.0), 0.0);
  EXPECT_NEAR(std::exp(log_poisson_pmf(3, 0.5)), poisson_pmf(3, 0.5), 1e-18);
}

TEST(PoissonPmf, RejectsBadArguments) {
  EXPECT_THROW(poisson_pmf(-1, 1.0), DomainError);
  EXPECT_THROW(poisson_pmf(1, -0.5), DomainError);
}

TEST(PoissonPmf, TruncationBoundCoversTail) {
  for (double mean : {0.01, 0.5, 5.0, 40.0}) {
    const int nmax = poisson_truncation_bound(mean, 1e-12);
    double mass = 0.0;
    for (int n = 0; n <= nmax; ++n) mass += poisson_pmf(n, mean);
    EXPECT_GT(mass, 1.0 - 1e-11) << mean;
  }
}

TEST(Posterior, PerfectDetectorNoClickIsVacuum) {
  const auto p = posterior(src(1.0), det(1.0, 0.0), Outcome::no_click());
  EXPECT_NEAR(p.probabilities[0], 1.0, 1e-15);
  EXPECT_NEAR(p.mean(), 0.0, 1e-15);
  EXPECT_EQ(p.conditioned_on, Outcome::no_click());
}

TEST(Posterior, NoClickMeanIsAlphaSqTimesLoss) {
  EXPECT_NEAR(posterior(src(1.0), det(0.2, 0.0), Outcome::no_click()).mean(), 0.8, 1e-12);
  EXPECT_NEAR(inferred_mean(src(1.0), det(0.2, 0.0), Outcome::no_click()), 0.8, 1e-15);
}

TEST(Posterior, ClickWithBackground) {
  const double closed = inferred_mean(src(0.5), det(0.2, 0.06), Outcome::click());
  EXPECT_NEAR(closed, 1.069107449998845, 1e-12);
  EXPECT_NEAR(posterior(src(0.5), det(0.2, 0.06), Outcome::click()).mean(), closed, 1e-10);
}

TEST(Posterior, ClickWithoutBackground) {
  const double expected = 0.4 + 0.1 / (1.0 - std::exp(-0.1));
  EXPECT_NEAR(inferred_mean(src(0.5), det(0.2, 0.0), Outcome::click()), expected, 1e-13);
  EXPECT_NEAR(expected, 1.450833194477505, 1e-12);
}

TEST(Posterior, NormalizedAndTruncated) {
  const auto p = posterior(src(2.0), det(0.2, 0.1), Outcome::click());
  EXPECT_NEAR(p.total(), 1.0, 1e-12);
  EXPECT_EQ(static_cast<int>(p.probabilities.size()), p.truncation_bound + 1);
}

TEST(Posterior, FigureThreeFamilyPoint) {
  EXPECT_NEAR(inferred_mean(src(2.0), det(0.2, 0.1), Outcome::no_click()), 1.6, 1e-14);
  EXPECT_NEAR(inferred_mean(src(2.0), det(0.2, 0.1), Outcome::click()), 2.608288233719863, 1e-12);
}

TEST(Posterior, ImpossibleClick) {
  EXPECT_THROW(posterior(src(1.0), det(0.0, 0.0), Outcome::click()), ImpossibleEventError);
  EXPECT_THROW(inferred_mean(src(1.0), det(0.0, 0.0), Outcome::click()), ImpossibleEventError);
  EXPECT_THROW(posterior(src(0.0), det(0.5, 0.0), Outcome::click()), ImpossibleEventError);
}

TEST(Posterior, DetectorKindMustMatchOutcome) {
  EXPECT_THROW(posterior(src(1.0), det(0.2, 0.0, true), Outcome::click()), DomainError);
  EXPECT_THROW(posterior(src(1.0), det(0.2, 0.0, false), Outcome::resolved(1)), DomainError);
}

TEST(Validation, RejectsOutOfRange) {
  EXPECT_THROW(src(-1.0).validate(), DomainError);
  EXPECT_THROW(det(1.1, 0.0).validate(), DomainError);
  EXPECT_THROW(det(0.2, 1.0).validate(), DomainError);
  EXPECT_THROW(det(0.2, -0.1).validate(), DomainError);
}

TEST(ClickProbability, BackgroundOnly) {
  EXPECT_NEAR(click_probability(src(0.0), det(0.7, 0.13)), 0.13, 1e-15);
}

TEST(ClickProbability, NoBackground) {
  EXPECT_NEAR(click_probability(src(0.5), det(0.2, 0.0)), 0.09516258196404043, 1e-15);
  EXPECT_NEAR(click_probability(src(0.5), det(0.2, 0.06)), 0.1494528270461980, 1e-15);
  EXPECT_NEAR(click_probability(src(0.5), det(0.2, 0.06)) + no_click_probability(src(0.5), det(0.2, 0.06)), 1.0,
              1e-15);
}

TEST(UnityDifference, LowCountLimit) {
  for (double eta : {0.05, 0.2, 0.9}) {
    const double a = 1e-4 / eta;
    EXPECT_NEAR(inferred_difference(src(a), det(eta, 0.0)), 1.0, 1e-4) << eta;
  }
}

TEST(UnityDifference, ShrinksWithBackground) {
  EXPECT_LT(inferred_difference(src(0.5), det(0.2, 0.06)), inferred_difference(src(0.5), det(0.2, 0.0)));
}

TEST(NumberResolving, ZeroCountsMatchesNoClick) {
  EXPECT_NEAR(number_resolving_mean(src(1.0), det(0.2, 0.0, true), 0), 0.8, 1e-15);
}

TEST(NumberResolving, WithoutBackgroundShiftsByK) {
  for (int k = 0; k <= 4; ++k) {
    EXPECT_NEAR(number_resolving_mean(src(1.5), det(0.3, 0.0, true), k), k + 1.5 * 0.7, 1e-13);
  }
}

TEST(NumberResolving, ClosedFormMatchesBruteForce) {
  const DetectorModel d = det(0.2, 0.1, true);
  for (double a : {0.05, 0.5, 2.0, 5.0}) {
    for (int k = 0; k <= 3; ++k) {
      EXPECT_NEAR(number_resolving_mean(src(a), d, k), posterior(src(a), d, Outcome::resolved(k)).mean(), 1e-10)
          << a << " " << k;
    }
  }
}

TEST(NumberResolving, WeightedAverageGivesClickCurve) {
  const DetectorModel r = det(0.2, 0.1, true);
  const DetectorModel t = det(0.2, 0.1, false);
  for (double a : {0.01, 0.3, 1.0, 4.0}) {
    double num = 0.0, den = 0.0;
    for (int k = 1; k <= 40; ++k) {
      const double p = count_probability(src(a), r, k);
      num += p * number_resolving_mean(src(a), r, k);
      den += p;
    }
    EXPECT_NEAR(num / den, inferred_mean(src(a), t, Outcome::click()), 1e-9) << a;
    EXPECT_NEAR(den, click_probability(src(a), t), 1e-12);
  }
}

TEST(OutcomeLabel, Names) {
  EXPECT_EQ(Outcome::no_click().label(), "no-click");
  EXPECT_EQ(Outcome::click().label(), "click");
  EXPECT_EQ(Outcome::resolved(2).label(), "k-resolved(2)");
}
