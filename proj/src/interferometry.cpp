#include "xps/interferometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "xps/errors.hpp"

namespace xps {

namespace {

constexpr double kGaussianSupport = 4.5;  // truncation, in sigmas

long to_sample(double t, double fs) { return std::lround(t * fs); }

/// Moving average over one beat period, odd-length and symmetric.
std::vector<double> period_average(int period) {
  std::vector<double> b;
  if (period % 2 == 0) {
    b.assign(static_cast<std::size_t>(period) + 1, 1.0 / period);
    b.front() = b.back() = 0.5 / period;
  } else {
    b.assign(static_cast<std::size_t>(period), 1.0 / period);
  }
  return b;
}

double symmetric_response(std::span<const double> h, double cycles_per_sample) {
  const int half = static_cast<int>(h.size() / 2);
  double sum = 0.0;
  for (int m = -half; m <= half; ++m) {
    sum += h[static_cast<std::size_t>(m + half)] * std::cos(2.0 * std::numbers::pi * cycles_per_sample * m);
  }
  return sum;
}

std::vector<double> gaussian_taps(double sigma) {
  const int half = static_cast<int>(std::ceil(kGaussianSupport * sigma));
  std::vector<double> g(static_cast<std::size_t>(2 * half + 1));
  double total = 0.0;
  for (int m = -half; m <= half; ++m) {
    const double v = std::exp(-0.5 * (m / sigma) * (m / sigma));
    g[static_cast<std::size_t>(m + half)] = v;
    total += v;
  }
  for (double& v : g) v /= total;
  return g;
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

double interpolate(const XpsProfile& prof, double t) {
  const auto& ts = prof.times;
  if (ts.empty() || t < ts.front() || t > ts.back()) return 0.0;
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  if (it == ts.end()) return prof.phase.back();
  const auto i = static_cast<std::size_t>(it - ts.begin());
  if (i == 0) return prof.phase.front();
  const double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
  return prof.phase[i - 1] * (1.0 - w) + prof.phase[i] * w;
}

}  // namespace

// --- DemodConfig -----------------------------------------------------------

void DemodConfig::validate() const {
  if (!(sample_rate > 0.0 && beat_frequency > 0.0 && analysis_bandwidth > 0.0)) {
    throw ConfigError("sample rate, beat frequency and analysis bandwidth must be > 0");
  }
  if (!(sample_rate > 4.0 * beat_frequency)) {
    throw ConfigError(fmt::format("sample rate {} Hz must exceed 4x the beat frequency {} Hz", sample_rate,
                                  beat_frequency));
  }
  if (!(analysis_bandwidth < beat_frequency / 10.0)) {
    throw ConfigError("analysis bandwidth must be below a tenth of the beat frequency");
  }
  const double period = sample_rate / beat_frequency;
  if (std::abs(period - std::round(period)) > 1e-9 * period) {
    throw ConfigError("sample rate must be an integer multiple of the beat frequency");
  }
  if (decimation < 1) throw ConfigError("decimation must be >= 1");
  if (!(sample_rate / decimation >= 2.0 * analysis_bandwidth)) {
    throw ConfigError("decimated output rate must be at least twice the analysis bandwidth");
  }
  if (!(baseline_window > 0.0)) throw ConfigError("baseline window must be > 0");
  if (!(tag_burst_amplitude > 0.0 && tag_burst_duration > 0.0 && tag_threshold > 1.0)) {
    throw ConfigError("tag burst amplitude/duration must be > 0 and threshold > 1");
  }
}

int DemodConfig::samples_per_beat() const {
  return static_cast<int>(std::lround(sample_rate / beat_frequency));
}

// --- Demodulator -----------------------------------------------------------

Demodulator::Demodulator(const DemodConfig& config) : config_(config) {
  config_.validate();
  period_ = config_.samples_per_beat();
  const auto avg = period_average(period_);
  const double fc = 0.5 * config_.analysis_bandwidth / config_.sample_rate;  // cycles/sample
  const double avg_response = symmetric_response(avg, fc);
  const double target = 1.0 / std::numbers::sqrt2;
  if (!(avg_response > target)) {
    throw ConfigError("analysis bandwidth too wide for the beat-period average");
  }

  // |H| at fc falls monotonically with the Gaussian width; bisect in log space.
  double lo = std::log(0.25), hi = std::log(1e7);
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double h = symmetric_response(gaussian_taps(std::exp(mid)), fc) * avg_response;
    (h > target ? lo : hi) = mid;
  }
  sigma_samples_ = std::exp(0.5 * (lo + hi));
  taps_ = convolve(gaussian_taps(sigma_samples_), avg);
  double total = 0.0;
  for (double v : taps_) total += v;
  for (double& v : taps_) v /= total;
  half_width_ = static_cast<int>(taps_.size() / 2);

  lo_cos_.resize(static_cast<std::size_t>(period_));
  lo_sin_.resize(static_cast<std::size_t>(period_));
  for (int k = 0; k < period_; ++k) {
    const double th = 2.0 * std::numbers::pi * k / period_;
    lo_cos_[static_cast<std::size_t>(k)] = std::cos(th);
    lo_sin_[static_cast<std::size_t>(k)] = std::sin(th);
  }
}

double Demodulator::response(double frequency) const {
  return std::abs(symmetric_response(taps_, frequency / config_.sample_rate));
}

DemodSeries Demodulator::demodulate(std::span<const double> samples, long first_sample) const {
  DemodSeries out;
  out.sample_rate = config_.sample_rate;
  const long n = static_cast<long>(samples.size());
  if (n < 2L * half_width_ + 1) return out;

  const long p = period_;
  const long phase0 = ((first_sample % p) + p) % p;
  std::vector<double> mix_i(samples.size()), mix_q(samples.size());
  for (long k = 0; k < n; ++k) {
    const auto idx = static_cast<std::size_t>((phase0 + k) % p);
    mix_i[static_cast<std::size_t>(k)] = 2.0 * samples[static_cast<std::size_t>(k)] * lo_cos_[idx];
    mix_q[static_cast<std::size_t>(k)] = -2.0 * samples[static_cast<std::size_t>(k)] * lo_sin_[idx];
  }

  const long d = config_.decimation;
  const long lo = first_sample + half_width_;
  const long hi = first_sample + n - 1 - half_width_;
  long c = ((lo + d - 1) / d) * d;
  if (lo < 0) c = -((-lo) / d) * d;
  const std::size_t taps = taps_.size();
  for (; c <= hi; c += d) {
    const auto start = static_cast<std::size_t>(c - first_sample - half_width_);
    double i_acc = 0.0, q_acc = 0.0;
    for (std::size_t m = 0; m < taps; ++m) {
      i_acc += taps_[m] * mix_i[start + m];
      q_acc += taps_[m] * mix_q[start + m];
    }
    out.centers.push_back(c);
    out.times.push_back(static_cast<double>(c) / config_.sample_rate);
    out.phase.push_back(std::atan2(q_acc, i_acc));
    out.amplitude.push_back(std::hypot(i_acc, q_acc));
  }
  return out;
}

// --- layout ----------------------------------------------------------------

ShotWindows shot_windows(const ShotLayout& layout, const DemodConfig& config, int filter_half_width) {
  const double fs = config.sample_rate;
  if (!(layout.shot_period > 0.0 && layout.xps_window_length > 0.0)) {
    throw LayoutError("shot period and XPS window length must be > 0");
  }
  ShotWindows w;
  w.xps = {to_sample(layout.xps_begin(), fs), to_sample(layout.xps_end(), fs)};
  const long base = to_sample(config.baseline_window, fs);
  w.pre = {w.xps.begin - base, w.xps.begin};
  w.post = {w.xps.end, w.xps.end + base};
  const long half_tag = to_sample(0.5 * config.tag_burst_duration, fs);
  const long centre = to_sample(layout.pulse_center, fs);
  w.tag = {centre - half_tag, centre + half_tag};

  const long slot = to_sample(layout.shot_period, fs);
  if (w.pre.begin - filter_half_width < 0 || w.post.end - 1 + filter_half_width > slot - 1) {
    throw LayoutError(fmt::format(
        "baseline/XPS windows [{}, {}) ns plus the {} ns filter half-width do not fit in a {} ns shot",
        w.pre.begin / fs * 1e9, w.post.end / fs * 1e9, filter_half_width / fs * 1e9, layout.shot_period * 1e9));
  }
  if (w.tag.begin < 0 || w.tag.end > slot) throw LayoutError("tag burst does not fit in the shot slot");
  return w;
}

// --- ShotProcessor ---------------------------------------------------------

ShotProcessor::ShotProcessor(const DemodConfig& config, const ShotLayout& layout)
    : config_(config), layout_(layout), demod_(config) {
  const double exact = layout_.shot_period * config_.sample_rate;
  slot_samples_ = static_cast<std::size_t>(std::llround(exact));
  if (std::abs(exact - static_cast<double>(slot_samples_)) > 1e-6) {
    throw LayoutError("shot period must be an integer number of samples");
  }
  const auto p = static_cast<std::size_t>(config_.samples_per_beat());
  const auto d = static_cast<std::size_t>(config_.decimation);
  if (slot_samples_ % p != 0 || slot_samples_ % d != 0) {
    throw LayoutError("shot period must be a whole number of beat periods and output samples");
  }
  windows_ = shot_windows(layout_, config_, demod_.half_width());

  grid_ = demod_.demodulate(std::vector<double>(slot_samples_, 0.0));
  std::size_t n_xps = 0, n_base = 0;
  for (long c : grid_.centers) {
    if (windows_.xps.contains(c)) ++n_xps;
    if (windows_.pre.contains(c) || windows_.post.contains(c)) ++n_base;
  }
  if (n_xps == 0 || n_base == 0) throw LayoutError("measurement windows contain no output samples");
  estimator_weights_.assign(grid_.centers.size(), 0.0);
  for (std::size_t j = 0; j < grid_.centers.size(); ++j) {
    const long c = grid_.centers[j];
    if (windows_.xps.contains(c)) estimator_weights_[j] = 1.0 / static_cast<double>(n_xps);
    if (windows_.pre.contains(c) || windows_.post.contains(c)) {
      estimator_weights_[j] = -1.0 / static_cast<double>(n_base);
    }
  }
}

double ShotProcessor::sample_sigma(double phase_variance) const {
  if (!(phase_variance >= 0.0)) throw DomainError("phase variance must be >= 0");
  // To first order the shot estimate is sum_k c_k n_k over the additive
  // sample noise n_k; the quadrature mixing gives c_k = -(2/a) sin(w t_k) g_k
  // with g the estimator weights pushed back through the filter.
  const auto taps = demod_.taps();
  const int half = demod_.half_width();
  std::vector<double> g(slot_samples_, 0.0);
  for (std::size_t j = 0; j < grid_.centers.size(); ++j) {
    const double w = estimator_weights_[j];
    if (w == 0.0) continue;
    const long start = grid_.centers[j] - half;
    for (std::size_t m = 0; m < taps.size(); ++m) g[static_cast<std::size_t>(start) + m] += w * taps[m];
  }
  const int p = config_.samples_per_beat();
  double gain = 0.0;
  for (std::size_t k = 0; k < slot_samples_; ++k) {
    const double s = std::sin(2.0 * std::numbers::pi * static_cast<double>(k % p) / p);
    const double c = 2.0 / beat_amplitude() * s * g[k];
    gain += c * c;
  }
  return std::sqrt(phase_variance / gain);
}

double ShotProcessor::linear_response(std::span<const double> injected_phase) const {
  if (injected_phase.size() != slot_samples_) throw DomainError("injected phase must cover one slot");
  const auto taps = demod_.taps();
  const int half = demod_.half_width();
  double r = 0.0;
  for (std::size_t j = 0; j < grid_.centers.size(); ++j) {
    const double w = estimator_weights_[j];
    if (w == 0.0) continue;
    const auto start = static_cast<std::size_t>(grid_.centers[j] - half);
    double acc = 0.0;
    for (std::size_t m = 0; m < taps.size(); ++m) acc += taps[m] * injected_phase[start + m];
    r += w * acc;
  }
  return r;
}

std::vector<double> ShotProcessor::unit_profile(double tau, double tau_s) const {
  std::vector<double> u(slot_samples_);
  for (std::size_t k = 0; k < slot_samples_; ++k) {
    const double t = static_cast<double>(k) / config_.sample_rate - layout_.pulse_center;
    u[k] = xps_profile_value(t, 1.0, tau, tau_s);
  }
  const double r = linear_response(u);
  if (!(std::abs(r) > 0.0)) throw LayoutError("XPS profile has no overlap with the measurement window");
  for (double& v : u) v /= r;
  return u;
}

void ShotProcessor::synthesize_slot(std::span<const double> injected_phase, bool burst, double sigma,
                                    CounterRng& rng, std::span<double> out) const {
  if (out.size() != slot_samples_) throw DomainError("output buffer must hold one slot");
  if (!injected_phase.empty() && injected_phase.size() != slot_samples_) {
    throw DomainError("injected phase must cover one slot");
  }
  const int p = config_.samples_per_beat();
  const double a = beat_amplitude();
  const double b = config_.tag_burst_amplitude * a;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < slot_samples_; ++k) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(k % p) / p;
    const double phi = injected_phase.empty() ? 0.0 : injected_phase[k];
    double x = a + a * std::cos(th + phi);
    if (burst && windows_.tag.contains(static_cast<long>(k))) x += b * std::cos(th);
    if (sigma > 0.0) x += sigma * normal(rng);
    out[k] = x;
  }
}

PhaseEstimate ShotProcessor::analyze(std::span<const double> slot) const {
  if (slot.size() != slot_samples_) throw DomainError("slot has the wrong length");
  const DemodSeries s = demod_.demodulate(slot);
  PhaseEstimate est;
  double amp = 0.0;
  std::size_t n_xps = 0;
  for (std::size_t j = 0; j < s.centers.size(); ++j) {
    est.phase += estimator_weights_[j] * s.phase[j];
    if (windows_.xps.contains(s.centers[j])) {
      amp += s.amplitude[j];
      ++n_xps;
    }
  }
  est.amplitude = amp / static_cast<double>(n_xps);
  est.tag_detected = detect_tag(s, config_);
  return est;
}

// --- free functions --------------------------------------------------------

BeatTrace synthesize_trace(const XpsProfile& phase_profile, double probe_photons, const DemodConfig& config,
                           const ShotLayout& layout, bool tag, CounterRng& rng, const SynthesisOptions& options) {
  if (!(probe_photons > 0.0) || !std::isfinite(probe_photons)) {
    throw DomainError("probe photon budget must be > 0");
  }
  const ShotProcessor proc(config, layout);
  const std::size_t len = proc.slot_samples();
  const double variance = options.noise ? 1.0 / probe_photons + options.technical_noise * options.technical_noise : 0.0;
  const double sigma = options.noise ? proc.sample_sigma(variance) : 0.0;

  std::vector<double> phase(len);
  for (std::size_t k = 0; k < len; ++k) {
    phase[k] = interpolate(phase_profile, static_cast<double>(k) / config.sample_rate - layout.pulse_center);
  }

  BeatTrace trace;
  trace.sample_rate = config.sample_rate;
  trace.slot_samples = len;
  trace.samples.resize(tag ? 2 * len : len);
  proc.synthesize_slot(phase, false, sigma, rng, std::span(trace.samples).first(len));
  trace.meta.phase_scale.push_back(phase_profile.integrated);
  trace.meta.tag.push_back(false);
  if (tag) {
    proc.synthesize_slot({}, true, sigma, rng, std::span(trace.samples).subspan(len, len));
    trace.meta.phase_scale.push_back(0.0);
    trace.meta.tag.push_back(true);
  }
  trace.meta.probe_photons = probe_photons;
  return trace;
}

DemodSeries demodulate(const BeatTrace& trace, const DemodConfig& config) {
  if (trace.sample_rate != config.sample_rate) throw ConfigError("trace sample rate does not match configuration");
  return Demodulator(config).demodulate(trace.samples);
}

double baseline_subtract(const DemodSeries& series, double baseline_window, const ShotLayout& layout,
                         long slot_start) {
  const double fs = series.sample_rate;
  if (!(fs > 0.0) || series.centers.size() < 2) throw LayoutError("series is empty");
  const SampleWindow xps{slot_start + to_sample(layout.xps_begin(), fs), slot_start + to_sample(layout.xps_end(), fs)};
  const long base = to_sample(baseline_window, fs);
  const SampleWindow pre{xps.begin - base, xps.begin};
  const SampleWindow post{xps.end, xps.end + base};
  const long spacing = series.centers[1] - series.centers[0];
  if (series.centers.front() > pre.begin || series.centers.back() < post.end - spacing) {
    throw LayoutError("baseline windows extend beyond the demodulated series");
  }
  double sx = 0.0, sb = 0.0;
  std::size_t nx = 0, nb = 0;
  for (std::size_t j = 0; j < series.centers.size(); ++j) {
    const long c = series.centers[j];
    if (xps.contains(c)) {
      sx += series.phase[j];
      ++nx;
    } else if (pre.contains(c) || post.contains(c)) {
      sb += series.phase[j];
      ++nb;
    }
  }
  if (nx == 0 || nb == 0) throw LayoutError("measurement windows contain no output samples");
  return sx / static_cast<double>(nx) - sb / static_cast<double>(nb);
}

bool detect_tag(std::span<const double> amplitude, std::size_t window_samples, double threshold) {
  if (amplitude.empty() || window_samples == 0) return false;
  std::vector<double> mags(amplitude.size());
  std::transform(amplitude.begin(), amplitude.end(), mags.begin(), [](double v) { return std::abs(v); });
  auto mid = mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2);
  std::nth_element(mags.begin(), mid, mags.end());
  const double limit = threshold * *mid;

  const std::size_t w = std::min(window_samples, amplitude.size());
  const std::size_t need = (window_samples + 1) / 2;
  std::size_t count = 0;
  for (std::size_t j = 0; j < amplitude.size(); ++j) {
    if (std::abs(amplitude[j]) > limit) ++count;
    if (j >= w && std::abs(amplitude[j - w]) > limit) --count;
    if (j + 1 >= w && count >= need) return true;
  }
  return false;
}

bool detect_tag(const DemodSeries& series, const DemodConfig& config) {
  const auto window = static_cast<std::size_t>(std::lround(config.tag_burst_duration / config.output_spacing()));
  return detect_tag(series.amplitude, std::max<std::size_t>(window, 1), config.tag_threshold);
}

std::vector<PhaseEstimate> analyze_trace(const BeatTrace& trace, const DemodConfig& config,
                                         const ShotLayout& layout) {
  const ShotProcessor proc(config, layout);
  if (trace.slot_samples != proc.slot_samples()) throw LayoutError("trace slot length does not match layout");
  std::vector<PhaseEstimate> out;
  for (std::size_t s = 0; s < trace.slots(); ++s) {
    auto est = proc.analyze(std::span(trace.samples).subspan(s * trace.slot_samples, trace.slot_samples));
    if (trace.meta.probe_photons > 0.0) est.uncertainty = phase_noise(trace.meta.probe_photons);
    out.push_back(est);
  }
  return out;
}

std::vector<TagOutcome> resolve_tags(std::span<const PhaseEstimate> slots) {
  std::vector<TagOutcome> out(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    out[i].discarded = slots[i].tag_detected;
    out[i].click = i + 1 < slots.size() && slots[i + 1].tag_detected;
  }
  return out;
}

double phase_noise(double probe_photons) {
  if (!(probe_photons > 0.0) || !std::isfinite(probe_photons)) {
    throw DomainError("probe photon number must be > 0");
  }
  return 1.0 / std::sqrt(probe_photons);
}

}  // namespace xps
