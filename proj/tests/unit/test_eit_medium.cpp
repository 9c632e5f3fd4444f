#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "xps/eit_medium.hpp"
#include "xps/errors.hpp"
#include "xps/fitting.hpp"
#include "xps/units.hpp"

using namespace xps;
using units::mhz_to_angular;

namespace {

MediumParams reference_medium() {
  MediumParams p;
  p.gamma = mhz_to_angular(6.0);
  p.eit_fwhm = mhz_to_angular(2.0);
  p.response_time = 250e-9;
  p.probe_od_change = 2.0;
  p.signal_od_resonant = 4.0;
  p.mode_area_ratio = 3000.0;
  return p;
}

const double kDelta = mhz_to_angular(18.0);

double trapezoid(const std::vector<double>& t, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

std::vector<double> grid(double a, double b, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

double profile_peak(double tau_s) {
  const auto p = reference_medium();
  const double phi0 = integrated_xps(p, kDelta);
  double best = 0.0;
  for (double t = -200e-9; t < 1000e-9; t += 0.1e-9) {
    best = std::max(best, std::abs(xps_profile_value(t, phi0, p.response_time, tau_s)));
  }
  return best;
}

}  // namespace

TEST(AcStark, ZeroOnResonanceAndOdd) {
  const double g = mhz_to_angular(6.0);
  EXPECT_EQ(ac_stark_shift(1e14, 0.0, g), 0.0);
  for (double d : {1e5, 3e7, -2e8}) EXPECT_DOUBLE_EQ(ac_stark_shift(2e13, -d, g), -ac_stark_shift(2e13, d, g));
}

TEST(AcStark, ExtremumAtHalfLinewidth) {
  const double g = mhz_to_angular(6.0);
  double best_d = 0.0, best = 0.0;
  for (double d = 1e5; d < 3.0 * g; d += g * 1e-5) {
    const double v = std::abs(ac_stark_shift(1.0, d, g));
    if (v > best) {
      best = v;
      best_d = d;
    }
  }
  EXPECT_NEAR(best_d / (0.5 * g), 1.0, 1e-3);
}

TEST(AcStark, RejectsNonPositiveGamma) { EXPECT_THROW(ac_stark_shift(1.0, 1.0, 0.0), DomainError); }

TEST(EffectivePhotons, Limits) {
  const double g = mhz_to_angular(6.0);
  EXPECT_DOUBLE_EQ(effective_photon_number(1.0, 3e7, 0.0, g), 1.0);
  EXPECT_NEAR(effective_photon_number(1.0, 1e15, 4.0, g), 1.0, 1e-12);
  EXPECT_NEAR(effective_photon_number(1.0, 0.0, 4.0, g), 0.2454210902778165, 1e-15);
  EXPECT_THROW(effective_photon_number(-1.0, 0.0, 4.0, g), DomainError);
}

TEST(EffectivePhotons, AbsorptionFactorSeriesIsContinuous) {
  const double below = absorption_factor(0.999999e-6);
  const double above = absorption_factor(1.000001e-6);
  EXPECT_NEAR(below, above, 1e-12);
  EXPECT_DOUBLE_EQ(absorption_factor(0.0), 1.0);
}

TEST(EffectivePhotons, BoundedByIncident) {
  const double g = mhz_to_angular(6.0);
  for (double d = -1e9; d <= 1e9; d += 3.7e7) {
    const double n = effective_photon_number(2.0, d, 4.0, g);
    EXPECT_GT(n, 0.0);
    EXPECT_LT(n, 2.0);
  }
}

TEST(DetuningCurve, ShapeAndSign) {
  const double g = mhz_to_angular(6.0);
  const DetuningCurveParams p{500e-6, 4.0};
  EXPECT_EQ(xps_vs_detuning(0.0, p, g), 0.0);
  EXPECT_LT(xps_vs_detuning(kDelta, p, g), 0.0);
  EXPECT_GT(xps_vs_detuning(kDelta, {-500e-6, 4.0}, g), 0.0);
  EXPECT_THROW(xps_vs_detuning(kDelta, {500e-6, 0.0}, g), DomainError);
}

TEST(DetuningCurve, ExtremumFromDenseScan) {
  const double g = mhz_to_angular(6.0);
  const DetuningCurveParams p{500e-6, 4.0};
  double best = 0.0, where = 0.0;
  for (double d = 1e4; d < 10.0 * g; d += g * 1e-4) {
    const double v = std::abs(xps_vs_detuning(d, p, g));
    if (v > best) {
      best = v;
      where = d;
    }
  }
  // Absorption pushes the extremum out past Gamma/2 and lowers it below phi_m.
  EXPECT_GT(where, 0.5 * g);
  EXPECT_LT(best, 500e-6);
  EXPECT_GT(best, 100e-6);
  EXPECT_NEAR(xps_vs_detuning(-where, p, g), best, 1e-12);
}

TEST(IntegratedXps, ReferenceParameters) {
  const auto p = reference_medium();
  EXPECT_NEAR(integrated_xps(p, kDelta), -4.42097e-12, 1e-16);
  EXPECT_DOUBLE_EQ(integrated_xps(p, -kDelta), -integrated_xps(p, kDelta));
  auto wide = p;
  wide.mode_area_ratio *= 2.0;
  EXPECT_DOUBLE_EQ(integrated_xps(wide, kDelta), 0.5 * integrated_xps(p, kDelta));
  EXPECT_THROW(integrated_xps(p, 0.0), SingularityError);
}

TEST(HarrisHau, ReferenceValue) {
  const auto p = reference_medium();
  EXPECT_NEAR(harris_hau_limit(p, kDelta), 2.7777777e-5, 1e-11);
  EXPECT_NEAR(units::rad_to_urad(harris_hau_limit(p, kDelta)), 28.0, 0.5);
  EXPECT_GT(harris_hau_limit(p, kDelta), harris_hau_limit(p, 2.0 * kDelta));
  EXPECT_THROW(harris_hau_limit(p, 0.0), SingularityError);
}

TEST(HarrisHau, BoundsProfilePeak) {
  EXPECT_LE(profile_peak(40e-9), harris_hau_limit(reference_medium(), kDelta));
}

TEST(MediumValidation, Invariants) {
  auto p = reference_medium();
  EXPECT_NO_THROW(p.validate());
  p.eit_fwhm = p.gamma * 1.1;
  EXPECT_THROW(p.validate(), DomainError);
  p = reference_medium();
  p.response_time = 0.0;
  EXPECT_THROW(p.validate(), DomainError);
}

TEST(TemporalProfile, PeakAtReferenceValues) {
  EXPECT_NEAR(units::rad_to_urad(profile_peak(40e-9)), 13.0, 1.0);
}

TEST(TemporalProfile, EnhancementOverLongerPulse) {
  const double ratio = profile_peak(40e-9) / profile_peak(100e-9);
  EXPECT_NEAR(ratio, 1.37, 0.01);
}

TEST(TemporalProfile, IntegratesToPhiZero) {
  const double phi0 = integrated_xps(reference_medium(), kDelta);
  for (double tau_s : {40e-9, 100e-9}) {
    const double tau = 250e-9;
    const auto t = grid(-10.0 * tau_s, 15.0 * tau, 200001);
    const auto prof = xps_temporal_profile(t, phi0, tau, tau_s);
    EXPECT_EQ(prof.integrated, phi0);
    EXPECT_NEAR(trapezoid(prof.times, prof.phase) / phi0, 1.0, 1e-4) << tau_s;
  }
}

TEST(TemporalProfile, IntegralIndependentOfPulseWidth) {
  const double tau = 250e-9;
  for (double r : {0.01, 0.1, 0.5, 1.0, 2.0}) {
    const double tau_s = r * tau;
    const auto t = grid(-12.0 * tau_s, 20.0 * tau, 400001);
    const auto prof = xps_temporal_profile(t, 1.0, tau, tau_s);
    EXPECT_NEAR(trapezoid(prof.times, prof.phase), 1.0, 1e-4) << r;
  }
}

TEST(TemporalProfile, ShortPulseLimitIsExponential) {
  const double tau = 250e-9;
  for (double t : {50e-9, 200e-9, 600e-9}) {
    EXPECT_NEAR(xps_profile_value(t, 1.0, tau, tau / 1000.0) / (std::exp(-t / tau) / tau), 1.0, 1e-3);
  }
  EXPECT_NEAR(xps_profile_value(-50e-9, 1.0, tau, tau / 1000.0), 0.0, 1e-30);
}

TEST(TemporalProfile, FiniteFarFromPulse) {
  for (double t : {-5e-6, -1e-6, 0.0, 1e-5}) EXPECT_TRUE(std::isfinite(xps_profile_value(t, 1.0, 250e-9, 40e-9)));
  EXPECT_THROW(xps_profile_value(0.0, 1.0, 0.0, 40e-9), DomainError);
}

TEST(Saturation, LinearRegime) {
  const SaturationShape shape{0.5, kDelta, mhz_to_angular(6.0)};
  const double eit = mhz_to_angular(2.0);
  EXPECT_EQ(xps_vs_photon_number(0.0, 13e-6, eit, shape), 0.0);
  EXPECT_NEAR(xps_vs_photon_number(1.0, 13e-6, eit, shape), 13e-6, 1e-12);
  EXPECT_NEAR(xps_vs_photon_number(1.0, -13e-6, eit, shape), -13e-6, 1e-12);
  EXPECT_THROW(xps_vs_photon_number(-1.0, 13e-6, eit, shape), DomainError);
}

TEST(Saturation, SlopeFitRecoversConfiguredSlope) {
  const SaturationShape shape{0.5, kDelta, mhz_to_angular(6.0)};
  const double eit = mhz_to_angular(2.0);
  std::vector<LinearPoint> pts;
  for (double n = 0.0; n <= 5.0; n += 0.25) pts.push_back({n, xps_vs_photon_number(n, 13e-6, eit, shape), 0.0});
  EXPECT_NEAR(fit_linear_slope(pts, 5.0).slope / 13e-6, 1.0, 0.01);
}

TEST(Saturation, TurnsOverAtLargeShift) {
  const SaturationShape shape{0.5, kDelta, mhz_to_angular(6.0)};
  const double eit = mhz_to_angular(2.0);
  // The peak is reached at s n = 2A, i.e. n = 2 * 0.5 / 13e-6.
  const double n_peak = 1.0 / 13e-6;
  const double at_peak = xps_vs_photon_number(n_peak, 13e-6, eit, shape);
  EXPECT_NEAR(at_peak, 0.5, 1e-9);
  EXPECT_LT(xps_vs_photon_number(3.0 * n_peak, 13e-6, eit, shape), at_peak);
}
