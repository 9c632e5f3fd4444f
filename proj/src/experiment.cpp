#include "xps/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "xps/errors.hpp"
#include "xps/rng.hpp"
#include "xps/units.hpp"

namespace xps {

namespace {

constexpr std::uint64_t kChunkShots = 1u << 16;
constexpr std::uint64_t kPhysicsStream = 0;
constexpr std::uint64_t kNoiseStream = 1;

std::uint64_t thin(std::uint64_t n, double p, CounterRng& rng) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  if (n <= 32) {
    std::uint64_t kept = 0;
    for (std::uint64_t i = 0; i < n; ++i) kept += rng.uniform() < p ? 1 : 0;
    return kept;
  }
  return std::binomial_distribution<std::uint64_t>(n, p)(rng);
}

struct Accumulator {
  RunningStats click, noclick, all;
  RunningStats photons_click, photons_noclick;
  std::uint64_t discarded = 0;
  std::uint64_t total_clicks = 0;
  std::uint64_t mismatches = 0;

  void add(const ShotRecord& r) {
    if (r.click) ++total_clicks;
    if (r.discarded) {
      ++discarded;
      return;
    }
    all.add(r.phase_sample);
    if (r.click) {
      click.add(r.phase_sample);
      photons_click.add(static_cast<double>(r.true_photons));
    } else {
      noclick.add(r.phase_sample);
      photons_noclick.add(static_cast<double>(r.true_photons));
    }
  }

  void merge(const Accumulator& o) {
    click.merge(o.click);
    noclick.merge(o.noclick);
    all.merge(o.all);
    photons_click.merge(o.photons_click);
    photons_noclick.merge(o.photons_noclick);
    discarded += o.discarded;
    total_clicks += o.total_clicks;
    mismatches += o.mismatches;
  }
};

/// Pairwise merge in index order; the tree shape depends only on the count.
Accumulator merge_tree(std::span<const Accumulator> parts) {
  if (parts.empty()) return {};
  if (parts.size() == 1) return parts[0];
  const auto mid = parts.size() / 2;
  Accumulator left = merge_tree(parts.first(mid));
  left.merge(merge_tree(parts.subspan(mid)));
  return left;
}

double safe_div(double num, double den) {
  return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::string_view mode_name(SimulationMode mode) {
  return mode == SimulationMode::signal ? "signal" : "statistical";
}

SimulationMode parse_mode(std::string_view name) {
  if (name == "statistical") return SimulationMode::statistical;
  if (name == "signal") return SimulationMode::signal;
  throw ConfigError(fmt::format("unknown mode '{}' (expected statistical or signal)", name));
}

double NoiseModel::single_shot_sigma() const {
  return std::hypot(phase_noise(probe_photons), technical_noise);
}

double NoiseModel::technical_for(double total_sigma, double probe_photons) {
  const double shot = phase_noise(probe_photons);
  if (!(total_sigma >= shot)) {
    throw DomainError(fmt::format("total sigma {} rad is below the shot-noise floor {} rad", total_sigma, shot));
  }
  return std::sqrt(total_sigma * total_sigma - shot * shot);
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.source.mean_photons = 0.5;
  c.source.pulse_fwhm = 40e-9;
  c.source.center_detuning = units::mhz_to_angular(18.0);
  c.detector.efficiency = 0.2;
  c.detector.background_click_prob = 0.06;
  c.medium.gamma = units::mhz_to_angular(6.0);
  c.medium.eit_fwhm = units::mhz_to_angular(2.0);
  c.medium.response_time = 250e-9;
  c.medium.probe_od_change = 2.0;
  c.medium.signal_od_resonant = 4.0;
  c.medium.mode_area_ratio = 3000.0;
  c.saturation_peak_phase = c.medium.probe_od_change / 4.0;
  c.noise.technical_noise = NoiseModel::technical_for(0.05, c.noise.probe_photons);
  return c;
}

void ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  auto check = [&](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const ValidationError& e) {
      for (const auto& p : e.problems()) problems.push_back(p);
    } catch (const Error& e) {
      problems.push_back(fmt::format("{}: {}", what, e.what()));
    }
  };
  check("source", [&] { source.validate(); });
  check("detector", [&] { detector.validate(); });
  check("medium", [&] { medium.validate(); });
  check("demod", [&] { demod.validate(); });
  if (n_shots == 0) problems.emplace_back("n_shots: must be > 0");
  if (workers == 0) problems.emplace_back("workers: must be >= 1");
  if (shots_per_cycle == 0) problems.emplace_back("shots_per_cycle: must be >= 1");
  if (source.center_detuning == 0.0) {
    problems.emplace_back("source.detuning: the XPS model is singular on resonance");
  }
  if (!std::isfinite(per_photon_phase)) problems.emplace_back("per_photon_phase: must be finite");
  if (!(saturation_peak_phase > 0.0)) problems.emplace_back("saturation_peak_phase: must be > 0");
  if (!(noise.probe_photons > 0.0)) problems.emplace_back("noise.probe_photons: must be > 0");
  if (!(noise.technical_noise >= 0.0)) problems.emplace_back("noise.technical_noise: must be >= 0");
  if (!(layout.shot_period > source.pulse_fwhm + 2.0 * demod.baseline_window)) {
    problems.emplace_back("shot_period: must exceed the pulse duration plus two baseline windows");
  }
  if (problems.empty()) check("layout", [&] { const ShotProcessor probe(demod, layout); });
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

double ExperimentConfig::absorption_survival() const {
  return effective_photon_number(1.0, source.center_detuning, medium.signal_od_resonant, medium.gamma);
}

CoherentSource ExperimentConfig::interaction_source() const {
  CoherentSource s = source;
  s.mean_photons = source.mean_photons * absorption_survival();
  return s;
}

SaturationShape ExperimentConfig::saturation() const {
  return {saturation_peak_phase, source.center_detuning, medium.gamma};
}

// --- ShotEngine ------------------------------------------------------------

ShotEngine::ShotEngine(const ExperimentConfig& config) : config_(config) {
  config_.validate();
  survival_ = config_.absorption_survival();
  sigma_ = config_.noise.enabled ? config_.noise.single_shot_sigma() : 0.0;
  if (config_.mode == SimulationMode::signal) {
    processor_.emplace(config_.demod, config_.layout);
    unit_profile_ = processor_->unit_profile(config_.medium.response_time, config_.source.pulse_fwhm);
    sample_sigma_ = processor_->sample_sigma(sigma_ * sigma_);
  }
}

ShotPhysics ShotEngine::physics(std::uint64_t index) const {
  CounterRng rng(config_.seed, index, kPhysicsStream);
  ShotPhysics p;
  const double mean = config_.source.mean_photons;
  if (mean > 0.0) p.incident = std::poisson_distribution<std::uint64_t>(mean)(rng);
  p.interacting = thin(p.incident, survival_, rng);
  const std::uint64_t detected = thin(p.interacting, config_.detector.efficiency, rng);
  const bool background = rng.uniform() < config_.detector.background_click_prob;
  p.click = detected > 0 || background;
  return p;
}

double ShotEngine::mean_phase(std::uint64_t photons) const {
  return xps_vs_photon_number(static_cast<double>(photons), config_.per_photon_phase, config_.medium.eit_fwhm,
                              config_.saturation());
}

double ShotEngine::statistical_phase(std::uint64_t index, std::uint64_t photons) const {
  double phase = mean_phase(photons);
  if (sigma_ > 0.0) {
    CounterRng rng(config_.seed, index, kNoiseStream);
    phase += sigma_ * std::normal_distribution<double>(0.0, 1.0)(rng);
  }
  return phase;
}

PhaseEstimate ShotEngine::signal_slot(std::uint64_t index, std::uint64_t photons, bool burst,
                                      std::vector<double>& buffer, std::vector<double>& phase) const {
  const auto& proc = *processor_;
  buffer.resize(proc.slot_samples());
  phase.resize(proc.slot_samples());
  const double scale = mean_phase(photons);
  for (std::size_t k = 0; k < phase.size(); ++k) phase[k] = scale * unit_profile_[k];
  CounterRng rng(config_.seed, index, kNoiseStream);
  proc.synthesize_slot(phase, burst, sample_sigma_, rng, buffer);
  auto est = proc.analyze(buffer);
  est.uncertainty = config_.noise.single_shot_sigma();
  return est;
}

ShotRecord ShotEngine::make_record(std::uint64_t index, const ShotPhysics& phys) const {
  ShotRecord r;
  r.shot_index = index;
  r.cycle = index / config_.shots_per_cycle;
  r.incident_photons = phys.incident;
  r.true_photons = phys.interacting;
  r.click = phys.click;
  return r;
}

ShotRecord ShotEngine::run_shot(std::uint64_t index) const {
  ShotRecord rec;
  run_range(index, index + 1, [&](const ShotRecord& r) { rec = r; });
  return rec;
}

void ShotEngine::run_range(std::uint64_t begin, std::uint64_t end,
                           const std::function<void(const ShotRecord&)>& sink) const {
  if (begin >= end) return;
  bool prev_click = begin > 0 && physics(begin - 1).click;

  if (config_.mode == SimulationMode::statistical) {
    for (std::uint64_t i = begin; i < end; ++i) {
      const ShotPhysics phys = physics(i);
      ShotRecord r = make_record(i, phys);
      r.discarded = prev_click;
      r.phase_sample = statistical_phase(i, phys.interacting);
      prev_click = phys.click;
      sink(r);
    }
    return;
  }

  // Signal mode: a click is only known through the tag burst it leaves in
  // the next slot, so slot i+1 is analyzed before shot i is reported.
  std::vector<double> buffer, phase;
  ShotPhysics phys = physics(begin);
  PhaseEstimate est = signal_slot(begin, phys.interacting, prev_click, buffer, phase);
  for (std::uint64_t i = begin; i < end; ++i) {
    const ShotPhysics next_phys = physics(i + 1);
    const PhaseEstimate next_est = signal_slot(i + 1, next_phys.interacting, phys.click, buffer, phase);
    ShotRecord r = make_record(i, phys);
    r.discarded = est.tag_detected;
    r.click = next_est.tag_detected;
    r.phase_sample = est.phase;
    sink(r);
    phys = next_phys;
    est = next_est;
  }
}

// --- run_experiment --------------------------------------------------------

AggregateStats run_experiment(const ExperimentConfig& config, const RecordSink& sink) {
  const ShotEngine engine(config);
  const std::uint64_t n = config.n_shots;
  const std::size_t n_chunks = static_cast<std::size_t>((n + kChunkShots - 1) / kChunkShots);
  std::vector<Accumulator> parts(n_chunks);

  std::atomic<std::size_t> next{0};
  std::mutex emit_mutex;
  std::map<std::size_t, std::vector<ShotRecord>> pending;
  std::size_t next_emit = 0;
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    std::vector<ShotRecord> records;
    for (;;) {
      const std::size_t chunk = next.fetch_add(1);
      if (chunk >= n_chunks) return;
      const std::uint64_t begin = chunk * kChunkShots;
      const std::uint64_t end = std::min<std::uint64_t>(n, begin + kChunkShots);
      Accumulator acc;
      records.clear();
      try {
        // In signal mode click/discard come from the tag detector; the true
        // clicks are recomputed to count disagreements.
        const bool signal = config.mode == SimulationMode::signal;
        bool prev_true = begin > 0 && engine.physics(begin - 1).click;
        engine.run_range(begin, end, [&](const ShotRecord& r) {
          acc.add(r);
          if (signal) {
            const bool true_click = engine.physics(r.shot_index).click;
            if (true_click != r.click || prev_true != r.discarded) ++acc.mismatches;
            prev_true = true_click;
          }
          if (sink) records.push_back(r);
        });
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
      parts[chunk] = acc;
      if (sink) {
        std::lock_guard lock(emit_mutex);
        pending.emplace(chunk, std::move(records));
        records = {};
        for (auto it = pending.find(next_emit); it != pending.end(); it = pending.find(next_emit)) {
          sink(it->second);
          pending.erase(it);
          ++next_emit;
        }
      }
    }
  };

  const unsigned n_workers = std::max(1u, std::min<unsigned>(config.workers, static_cast<unsigned>(n_chunks)));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  const Accumulator total = merge_tree(parts);
  AggregateStats s;
  s.label = config.label;
  s.n_shots = n;
  s.n_click = total.click.count();
  s.n_noclick = total.noclick.count();
  s.n_discarded = total.discarded;
  s.n_total_clicks = total.total_clicks;
  s.tag_mismatches = total.mismatches;
  s.mean_phase_click = total.click.mean();
  s.mean_phase_noclick = total.noclick.mean();
  s.sem_click = total.click.sem();
  s.sem_noclick = total.noclick.sem();
  s.delta_phase = s.mean_phase_click - s.mean_phase_noclick;
  s.sem_delta = std::hypot(s.sem_click, s.sem_noclick);
  s.mean_photons_click = total.photons_click.mean();
  s.mean_photons_noclick = total.photons_noclick.mean();
  s.mean_phase_all = total.all.mean();
  s.sem_all = total.all.sem();

  const CoherentSource src = config.interaction_source();
  try {
    s.delta_n_inf = inferred_difference(src, config.detector);
  } catch (const ImpossibleEventError&) {
    s.delta_n_inf = std::numeric_limits<double>::quiet_NaN();
  }
  s.per_photon_estimate = safe_div(s.delta_phase, s.delta_n_inf);
  s.per_photon_sem = safe_div(s.sem_delta, s.delta_n_inf);
  return s;
}

double per_photon_phase_estimate(const AggregateStats& stats, const CoherentSource& source,
                                 const DetectorModel& detector) {
  double dn = 0.0;
  try {
    dn = inferred_difference(source, detector);
  } catch (const ImpossibleEventError&) {
    dn = 0.0;
  }
  if (!(dn > 0.0)) {
    throw EstimationError(fmt::format("inferred photon-number difference must be > 0 (got {})", dn));
  }
  return stats.delta_phase / dn;
}

std::vector<PhotonSweepPoint> sweep_photon_number(const ExperimentConfig& base, std::span<const double> alpha_sq) {
  std::vector<PhotonSweepPoint> out;
  for (std::size_t i = 0; i < alpha_sq.size(); ++i) {
    ExperimentConfig c = base;
    c.source.mean_photons = alpha_sq[i];
    c.label = fmt::format("{}-a{}", base.label, alpha_sq[i]);
    c.seed = splitmix64(base.seed + i);
    const AggregateStats s = run_experiment(c);
    out.push_back({c.interaction_source().mean_photons, s.mean_phase_all, s.sem_all});
  }
  return out;
}

std::uint64_t required_shots(double target_sem, double single_shot_sigma, double click_fraction) {
  if (!(target_sem > 0.0 && single_shot_sigma > 0.0 && click_fraction > 0.0 && click_fraction <= 1.0)) {
    throw DomainError("required_shots needs positive inputs and click fraction in (0, 1]");
  }
  const double ratio = single_shot_sigma / target_sem;
  const double estimate = ratio * ratio / click_fraction;
  if (!(estimate < 9e18)) throw DomainError("required shot count overflows");
  auto meets = [&](std::uint64_t n) {
    return single_shot_sigma / std::sqrt(static_cast<double>(n) * click_fraction) <= target_sem;
  };
  std::uint64_t n = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(estimate)));
  while (n > 1 && meets(n - 1)) --n;
  while (!meets(n)) ++n;
  return n;
}

}  // namespace xps
