#pragma once

// Deterministic model of the EIT cross-phase-shift medium.

#include <span>
#include <vector>

namespace xps {

struct MediumParams {
  double gamma = 0.0;               // excited-state linewidth, rad/s
  double eit_fwhm = 0.0;            // transparency window FWHM, rad/s
  double response_time = 0.0;       // tau, s
  double probe_od_change = 0.0;     // d: on-resonance probe OD without vs with coupling
  double signal_od_resonant = 0.0;  // d0: on-resonance OD of the signal transition
  double mode_area_ratio = 0.0;     // A / sigma_at = pi w0^2 / sigma_at

  void validate() const;
};

struct XpsProfile {
  std::vector<double> times;  // s, relative to the signal pulse centre
  std::vector<double> phase;  // rad
  double integrated = 0.0;    // rad*s, analytic time integral (phi0)
};

struct DetuningCurveParams {
  double phi_m = 0.0;  // rad
  double d0 = 0.0;
};

/// Shape of the probe dispersion used for the photon-number saturation.
///
/// The probe phase is the dispersive EIT response evaluated at the two-photon
/// detuning set by the signal's ac-Stark shift; `peak_phase` is its extremum,
/// reached when the shift equals half the EIT width. For a window with probe
/// OD change d this is d/4.
struct SaturationShape {
  double peak_phase = 0.5;       // rad
  double signal_detuning = 0.0;  // rad/s
  double gamma = 0.0;            // rad/s
};

double ac_stark_shift(double rabi_sq, double delta_s, double gamma);

/// d_s(delta_s) = d0 Gamma^2 / (4 delta_s^2 + Gamma^2).
double signal_optical_density(double delta_s, double d0, double gamma);

/// (1 - exp(-d)) / d, continuous at d = 0.
double absorption_factor(double od);

double effective_photon_number(double n0, double delta_s, double d0, double gamma);

double xps_vs_detuning(double delta_s, const DetuningCurveParams& params, double gamma);

/// Time-integrated XPS per signal photon, rad*s. Throws SingularityError on
/// resonance.
double integrated_xps(const MediumParams& params, double delta_s);

/// Per-photon bound |phi_max| = (Gamma / 4|delta_s|)(sigma_at / A).
double harris_hau_limit(const MediumParams& params, double delta_s);

/// Single-photon XPS temporal profile for a Gaussian pulse (rms tau_s) and a
/// medium with response time tau; integrates to phi0 over all t.
double xps_profile_value(double t, double phi0, double tau, double tau_s);

XpsProfile xps_temporal_profile(std::span<const double> t_grid, double phi0, double tau, double tau_s);

/// Omega_s^2 per signal photon that makes the small-n slope of
/// xps_vs_photon_number equal to `per_photon_slope`.
double rabi_sq_per_photon(double per_photon_slope, double eit_fwhm, const SaturationShape& shape);

/// Probe phase for `n` interaction-region photons: linear with slope
/// `per_photon_slope` while the ac-Stark shift is small against half the EIT
/// width, turning over beyond.
double xps_vs_photon_number(double n, double per_photon_slope, double eit_fwhm, const SaturationShape& shape);

}  // namespace xps
