#pragma once

// Frequency-domain interferometry: a two-tone probe produces a beat at
// `beat_frequency` on the photodiode; its phase carries the XPS. Traces are
// synthesized slot by slot (one slot per shot), mixed down against the
// reference, low-passed, decimated, and reduced to one baseline-subtracted
// phase per shot. Click tags appear as a 200 ns beat burst in the slot after
// the click.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "xps/eit_medium.hpp"
#include "xps/rng.hpp"

namespace xps {

struct DemodConfig {
  double beat_frequency = 100e6;      // Hz
  double analysis_bandwidth = 2e6;    // Hz, full width (-3 dB at half of it)
  double sample_rate = 1e9;           // Hz
  double baseline_window = 200e-9;    // s
  int decimation = 20;                // output every n-th sample
  double tag_burst_amplitude = 20.0;  // relative to the probe beat amplitude
  double tag_burst_duration = 200e-9; // s
  double tag_threshold = 3.0;         // K, in units of the median amplitude

  void validate() const;
  int samples_per_beat() const;
  double output_spacing() const { return decimation / sample_rate; }
};

/// Placement of the measurement windows inside one shot slot. Times are
/// relative to the slot start unless noted.
struct ShotLayout {
  double shot_period = 2.4e-6;
  double pulse_center = 1.0e-6;
  double xps_window_start = -100e-9;  // relative to pulse_center
  double xps_window_length = 600e-9;

  double xps_begin() const { return pulse_center + xps_window_start; }
  double xps_end() const { return xps_begin() + xps_window_length; }
};

struct SampleWindow {
  long begin = 0;  // first sample index, inclusive
  long end = 0;    // exclusive
  bool contains(long k) const { return k >= begin && k < end; }
};

struct ShotWindows {
  SampleWindow pre, xps, post, tag;
};

/// Converts a layout into sample-index windows; throws LayoutError when the
/// windows plus the filter support do not fit inside the slot.
ShotWindows shot_windows(const ShotLayout& layout, const DemodConfig& config, int filter_half_width);

struct TraceMeta {
  std::uint64_t shot_index = 0;
  std::vector<double> phase_scale;  // per slot, injected phase truth
  double probe_photons = 0.0;
  std::vector<bool> tag;            // per slot: this slot carries a burst
};

struct BeatTrace {
  std::vector<double> samples;
  double sample_rate = 0.0;
  std::size_t slot_samples = 0;
  TraceMeta meta;

  std::size_t slots() const { return slot_samples ? samples.size() / slot_samples : 0; }
};

/// Demodulated phase/amplitude vs time at the decimated rate.
struct DemodSeries {
  double sample_rate = 0.0;     // of the underlying trace
  std::vector<long> centers;    // sample index of each output
  std::vector<double> times;    // s
  std::vector<double> phase;    // rad
  std::vector<double> amplitude;
};

struct PhaseEstimate {
  double phase = 0.0;      // baseline-subtracted, rad
  double amplitude = 0.0;  // mean over the XPS window, arbitrary units
  double uncertainty = 0.0;
  bool tag_detected = false;
};

/// IQ mixdown at the beat frequency followed by a linear-phase FIR low-pass.
///
/// The filter is a Gaussian convolved with a one-beat-period moving average,
/// which puts exact zeros at every multiple of the beat frequency; the
/// Gaussian width is solved so that |H| = 1/sqrt(2) at analysis_bandwidth/2.
class Demodulator {
 public:
  explicit Demodulator(const DemodConfig& config);

  const DemodConfig& config() const { return config_; }
  std::span<const double> taps() const { return taps_; }
  int half_width() const { return half_width_; }
  double gaussian_sigma() const { return sigma_samples_ / config_.sample_rate; }
  /// |H(f)| of the low-pass.
  double response(double frequency) const;

  /// Outputs at every sample index that is a multiple of the decimation and
  /// whose full filter support lies inside the trace. `first_sample` is the
  /// absolute index of samples[0]; the reference phase is tied to it.
  DemodSeries demodulate(std::span<const double> samples, long first_sample = 0) const;

 private:
  DemodConfig config_;
  int period_ = 0;
  double sigma_samples_ = 0.0;
  int half_width_ = 0;
  std::vector<double> taps_;
  std::vector<double> lo_cos_, lo_sin_;
};

/// Per-slot synthesizer/analyzer with calibrated noise.
class ShotProcessor {
 public:
  ShotProcessor(const DemodConfig& config, const ShotLayout& layout);

  const Demodulator& demodulator() const { return demod_; }
  const ShotWindows& windows() const { return windows_; }
  const ShotLayout& layout() const { return layout_; }
  std::size_t slot_samples() const { return slot_samples_; }

  /// Per-sample white-noise sigma that makes the baseline-subtracted phase
  /// of one shot have variance `phase_variance`.
  double sample_sigma(double phase_variance) const;

  /// First-order response of the shot estimator to an injected phase
  /// waveform (one value per slot sample).
  double linear_response(std::span<const double> injected_phase) const;

  /// Unit-response temporal profile: the single-photon XPS shape placed at
  /// the pulse centre and scaled so that linear_response() == 1.
  std::vector<double> unit_profile(double tau, double tau_s) const;

  /// Fills `out` (slot_samples() long) with DC + beat(phase) + burst + noise.
  void synthesize_slot(std::span<const double> injected_phase, bool burst, double sigma,
                       CounterRng& rng, std::span<double> out) const;

  /// Demodulate, baseline-subtract, and check for a tag burst.
  PhaseEstimate analyze(std::span<const double> slot) const;

  double beat_amplitude() const { return 1.0; }

 private:
  DemodConfig config_;
  ShotLayout layout_;
  Demodulator demod_;
  ShotWindows windows_;
  std::size_t slot_samples_ = 0;
  std::vector<double> estimator_weights_;  // per output of a slot
  DemodSeries grid_;                       // output grid of a slot (no data)
};

struct SynthesisOptions {
  double technical_noise = 0.0;  // rad, extra per-shot phase noise
  bool noise = true;
};

/// Synthesizes one shot slot carrying `phase_profile` (times relative to the
/// pulse centre). With `tag`, a second slot follows that carries the burst.
BeatTrace synthesize_trace(const XpsProfile& phase_profile, double probe_photons, const DemodConfig& config,
                           const ShotLayout& layout, bool tag, CounterRng& rng,
                           const SynthesisOptions& options = {});

DemodSeries demodulate(const BeatTrace& trace, const DemodConfig& config);

/// Mean over the XPS window minus the mean over the pooled pre/post baseline
/// windows. `slot_start` is the sample index where the shot slot begins.
double baseline_subtract(const DemodSeries& series, double baseline_window, const ShotLayout& layout,
                         long slot_start = 0);

/// True iff within some window of `window_samples` consecutive outputs at
/// least half exceed `threshold` times the median amplitude.
bool detect_tag(std::span<const double> amplitude, std::size_t window_samples, double threshold);
bool detect_tag(const DemodSeries& series, const DemodConfig& config);

/// Splits a multi-slot trace and analyzes each slot.
std::vector<PhaseEstimate> analyze_trace(const BeatTrace& trace, const DemodConfig& config,
                                         const ShotLayout& layout);

struct TagOutcome {
  bool click = false;
  bool discarded = false;
};

/// A tag in slot i+1 marks shot i as a click; a tagged slot is discarded.
std::vector<TagOutcome> resolve_tags(std::span<const PhaseEstimate> slots);

/// Shot-noise-limited phase uncertainty, 1/sqrt(N).
double phase_noise(double probe_photons);

}  // namespace xps
