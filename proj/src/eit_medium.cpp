#include "xps/eit_medium.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "xps/errors.hpp"

namespace xps {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(fmt::format("{} must be finite and > 0 (got {})", name, v));
  }
}

void require_off_resonance(double delta_s) {
  if (delta_s == 0.0) {
    throw SingularityError("perturbative XPS model is singular for a resonant signal (delta_s = 0)");
  }
}

}  // namespace

void MediumParams::validate() const {
  require_positive(gamma, "gamma");
  require_positive(eit_fwhm, "eit_fwhm");
  require_positive(response_time, "response_time");
  require_positive(probe_od_change, "probe_od_change");
  require_positive(signal_od_resonant, "signal_od_resonant");
  require_positive(mode_area_ratio, "mode_area_ratio");
  if (!(eit_fwhm < gamma)) throw DomainError("EIT window must be narrower than the excited-state linewidth");
}

double ac_stark_shift(double rabi_sq, double delta_s, double gamma) {
  require_positive(gamma, "gamma");
  const double half = 0.5 * gamma;
  return -rabi_sq * delta_s / (delta_s * delta_s + half * half);
}

double signal_optical_density(double delta_s, double d0, double gamma) {
  require_positive(gamma, "gamma");
  if (!(d0 >= 0.0)) throw DomainError("optical density must be >= 0");
  return d0 * gamma * gamma / (4.0 * delta_s * delta_s + gamma * gamma);
}

double absorption_factor(double od) {
  if (!(od >= 0.0)) throw DomainError("optical density must be >= 0");
  if (od < 1e-6) return 1.0 - od / 2.0 + od * od / 6.0;
  return -std::expm1(-od) / od;
}

double effective_photon_number(double n0, double delta_s, double d0, double gamma) {
  if (!(n0 >= 0.0)) throw DomainError("photon number must be >= 0");
  return n0 * absorption_factor(signal_optical_density(delta_s, d0, gamma));
}

double xps_vs_detuning(double delta_s, const DetuningCurveParams& params, double gamma) {
  if (!std::isfinite(params.phi_m)) throw DomainError("phi_m must be finite");
  require_positive(params.d0, "d0");
  const double half = 0.5 * gamma;
  const double dispersive = delta_s * half / (delta_s * delta_s + half * half);
  return -2.0 * params.phi_m * dispersive *
         absorption_factor(signal_optical_density(delta_s, params.d0, gamma));
}

double integrated_xps(const MediumParams& p, double delta_s) {
  p.validate();
  require_off_resonance(delta_s);
  return (p.gamma / (-4.0 * delta_s)) * (1.0 / p.mode_area_ratio) * (p.probe_od_change / p.eit_fwhm);
}

double harris_hau_limit(const MediumParams& p, double delta_s) {
  p.validate();
  require_off_resonance(delta_s);
  return p.gamma / (4.0 * std::abs(delta_s)) / p.mode_area_ratio;
}

double xps_profile_value(double t, double phi0, double tau, double tau_s) {
  require_positive(tau, "tau");
  require_positive(tau_s, "tau_s");
  const double x = t / (std::numbers::sqrt2 * tau_s) - tau_s / (std::numbers::sqrt2 * tau);
  // 1 + erf(x) == erfc(-x), which keeps precision for t well before the pulse.
  const double gate = std::erfc(-x);
  if (gate == 0.0) return 0.0;
  const double envelope = std::exp(tau_s * tau_s / (2.0 * tau * tau) - t / tau);
  return phi0 / (2.0 * tau) * envelope * gate;
}

XpsProfile xps_temporal_profile(std::span<const double> t_grid, double phi0, double tau, double tau_s) {
  require_positive(tau, "tau");
  require_positive(tau_s, "tau_s");
  XpsProfile prof;
  prof.times.assign(t_grid.begin(), t_grid.end());
  prof.phase.reserve(t_grid.size());
  for (double t : t_grid) prof.phase.push_back(xps_profile_value(t, phi0, tau, tau_s));
  prof.integrated = phi0;
  return prof;
}

double rabi_sq_per_photon(double per_photon_slope, double eit_fwhm, const SaturationShape& shape) {
  require_positive(eit_fwhm, "eit_fwhm");
  require_positive(shape.peak_phase, "peak_phase");
  require_positive(shape.gamma, "gamma");
  require_off_resonance(shape.signal_detuning);
  // phi(D) = 2 A D h / (D^2 + h^2), h = eit_fwhm / 2, has slope 2A/h at D = 0;
  // the stark shift per photon must therefore be slope * h / (2A).
  const double h = 0.5 * eit_fwhm;
  const double shift_per_photon = per_photon_slope * h / (2.0 * shape.peak_phase);
  const double ds = shape.signal_detuning;
  const double half_gamma = 0.5 * shape.gamma;
  return -shift_per_photon * (ds * ds + half_gamma * half_gamma) / ds;
}

double xps_vs_photon_number(double n, double per_photon_slope, double eit_fwhm, const SaturationShape& shape) {
  if (!(n >= 0.0)) throw DomainError("photon number must be >= 0");
  const double rabi_sq = rabi_sq_per_photon(per_photon_slope, eit_fwhm, shape) * n;
  const double shift = ac_stark_shift(rabi_sq, shape.signal_detuning, shape.gamma);
  const double h = 0.5 * eit_fwhm;
  return 2.0 * shape.peak_phase * shift * h / (shift * shift + h * h);
}

}  // namespace xps
