#pragma once

// Bayesian inference of the photon number present in the interaction region of
// a coherent-state pulse, conditioned on the outcome of a lossy detector with
// per-gate background clicks.
//
// Detector model: every photon is detected independently with probability
// `efficiency`; a background click happens with probability
// `background_click_prob` per gate, independent of the signal. A threshold
// detector reports "click" if anything fired; a number-resolving detector
// reports the total count (detected signal photons + background bit).

#include <string>
#include <vector>

namespace xps {

struct CoherentSource {
  double mean_photons = 0.0;      // |alpha|^2
  double pulse_fwhm = 40e-9;      // s
  double center_detuning = 0.0;   // rad/s

  void validate() const;
};

struct DetectorModel {
  double efficiency = 0.2;
  double background_click_prob = 0.0;
  bool number_resolving = false;

  void validate() const;
};

enum class OutcomeKind { no_click, click, resolved };

struct Outcome {
  OutcomeKind kind = OutcomeKind::no_click;
  int counts = 0;  // only for `resolved`

  static Outcome no_click() { return {OutcomeKind::no_click, 0}; }
  static Outcome click() { return {OutcomeKind::click, 0}; }
  static Outcome resolved(int k) { return {OutcomeKind::resolved, k}; }

  std::string label() const;
  friend bool operator==(const Outcome&, const Outcome&) = default;
};

struct Posterior {
  std::vector<double> probabilities;  // index = photon number
  int truncation_bound = 0;           // n_max
  Outcome conditioned_on;

  double mean() const;
  double total() const;
};

/// Poisson pmf, evaluated in the log domain.
double poisson_pmf(int n, double mean);
double log_poisson_pmf(int n, double mean);

/// Smallest n_max such that P(N > n_max) < tail for N ~ Poisson(mean).
int poisson_truncation_bound(double mean, double tail);

/// Probability that a threshold detector stays dark (signal and background).
double no_click_probability(const CoherentSource& source, const DetectorModel& detector);
double click_probability(const CoherentSource& source, const DetectorModel& detector);

/// Probability of exactly `k` counts on a number-resolving detector.
double count_probability(const CoherentSource& source, const DetectorModel& detector, int k);

/// Brute-force posterior P(n | outcome), truncated so the neglected posterior
/// mass is below 1e-12.
Posterior posterior(const CoherentSource& source, const DetectorModel& detector, Outcome outcome);

/// Closed-form conditional mean photon number. Threshold outcomes require a
/// threshold detector; `resolved` dispatches to number_resolving_mean.
double inferred_mean(const CoherentSource& source, const DetectorModel& detector, Outcome outcome);

/// Closed-form E[n | k counts]: k + (1 - eta)|alpha|^2 without background,
/// a two-term mixture when background counts are possible.
double number_resolving_mean(const CoherentSource& source, const DetectorModel& detector, int k);

/// inferred_mean(click) - inferred_mean(no-click).
double inferred_difference(const CoherentSource& source, const DetectorModel& detector);

}  // namespace xps
