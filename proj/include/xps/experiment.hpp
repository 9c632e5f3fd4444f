#pragma once

// Shot-level simulation of the post-selected XPS measurement and the
// bookkeeping that turns shots into click / no-click statistics.
//
// Each shot draws an incident photon number, thins it by the signal
// absorption to get the photons present in the interaction region, detects
// those with efficiency eta (plus background), and produces one phase sample.
// A click tags the following shot, which is discarded from all statistics.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xps/eit_medium.hpp"
#include "xps/interferometry.hpp"
#include "xps/photon_inference.hpp"
#include "xps/running_stats.hpp"

namespace xps {

enum class SimulationMode { statistical, signal };

std::string_view mode_name(SimulationMode mode);
SimulationMode parse_mode(std::string_view name);

struct NoiseModel {
  bool enabled = true;
  double probe_photons = 4500.0;
  double technical_noise = 0.0;  // rad per shot, added in quadrature

  double single_shot_sigma() const;
  /// Technical noise that brings the total per-shot sigma to `total_sigma`.
  static double technical_for(double total_sigma, double probe_photons);
};

struct ExperimentConfig {
  std::string label = "run";
  CoherentSource source;
  DetectorModel detector;
  MediumParams medium;
  DemodConfig demod;
  ShotLayout layout;                   // layout.shot_period is the shot period
  double per_photon_phase = -13e-6;    // rad per interaction-region photon
  double saturation_peak_phase = 0.5;  // rad, see SaturationShape
  NoiseModel noise;
  std::uint64_t n_shots = 1'000'000;
  std::uint64_t seed = 1;
  SimulationMode mode = SimulationMode::statistical;
  unsigned workers = 1;
  std::uint64_t shots_per_cycle = 625;  // metadata only (1.5 ms / 2.4 us)

  double shot_period() const { return layout.shot_period; }
  /// Throws ValidationError naming every offending field.
  void validate() const;

  /// Fraction of incident photons present in the interaction region.
  double absorption_survival() const;
  /// The coherent state seen in the interaction region (mean thinned by
  /// absorption_survival()).
  CoherentSource interaction_source() const;
  SaturationShape saturation() const;
};

/// Reference defaults: Gamma = 2pi 6 MHz, 2 MHz EIT window, tau = 250 ns,
/// d = 2, d0 = 4, A/sigma = 3000, 18 MHz detuning, eta = 0.2, 40 ns pulses.
ExperimentConfig default_experiment_config();

struct ShotRecord {
  std::uint64_t shot_index = 0;
  std::uint64_t cycle = 0;
  std::uint64_t incident_photons = 0;
  std::uint64_t true_photons = 0;  // in the interaction region
  bool click = false;
  bool discarded = false;
  double phase_sample = 0.0;  // rad
};

struct AggregateStats {
  std::string label;
  std::uint64_t n_shots = 0;
  std::uint64_t n_click = 0;
  std::uint64_t n_noclick = 0;
  std::uint64_t n_discarded = 0;
  std::uint64_t n_total_clicks = 0;  // including clicks in discarded shots
  double mean_phase_click = 0.0, mean_phase_noclick = 0.0;
  double sem_click = 0.0, sem_noclick = 0.0;
  double delta_phase = 0.0, sem_delta = 0.0;
  double delta_n_inf = 0.0;
  double per_photon_estimate = 0.0, per_photon_sem = 0.0;
  double mean_photons_click = 0.0, mean_photons_noclick = 0.0;
  double mean_phase_all = 0.0, sem_all = 0.0;  // all surviving shots
  std::uint64_t tag_mismatches = 0;            // signal mode: tag vs truth
};

struct ShotPhysics {
  std::uint64_t incident = 0;
  std::uint64_t interacting = 0;
  bool click = false;
};

/// Precomputed per-configuration state for producing shots.
class ShotEngine {
 public:
  explicit ShotEngine(const ExperimentConfig& config);

  const ExperimentConfig& config() const { return config_; }

  /// Photon numbers and click of shot `index`; depends only on (seed, index).
  ShotPhysics physics(std::uint64_t index) const;

  /// Noise-free phase for `photons` interaction-region photons.
  double mean_phase(std::uint64_t photons) const;

  /// One complete shot including the discard flag from the previous shot.
  ShotRecord run_shot(std::uint64_t index) const;

  /// Processes shots [begin, end) in order, calling `sink` for each.
  void run_range(std::uint64_t begin, std::uint64_t end, const std::function<void(const ShotRecord&)>& sink) const;

 private:
  double statistical_phase(std::uint64_t index, std::uint64_t photons) const;
  PhaseEstimate signal_slot(std::uint64_t index, std::uint64_t photons, bool burst, std::vector<double>& buffer,
                            std::vector<double>& phase) const;
  ShotRecord make_record(std::uint64_t index, const ShotPhysics& phys) const;

  ExperimentConfig config_;
  double survival_ = 1.0;
  double sigma_ = 0.0;
  std::optional<ShotProcessor> processor_;
  std::vector<double> unit_profile_;
  double sample_sigma_ = 0.0;
};

using RecordSink = std::function<void(std::span<const ShotRecord>)>;

/// Runs all shots across `config.workers` threads. Shots are grouped in
/// fixed-size chunks merged in index order, so the result does not depend on
/// the worker count. `sink`, if given, receives every record in shot order.
AggregateStats run_experiment(const ExperimentConfig& config, const RecordSink& sink = {});

/// Measured phase difference divided by the inferred photon-number
/// difference for `source` (the interaction-region coherent state).
double per_photon_phase_estimate(const AggregateStats& stats, const CoherentSource& source,
                                 const DetectorModel& detector);

struct PhotonSweepPoint {
  double n = 0.0;      // interaction-region mean photon number
  double phase = 0.0;  // rad, mean over surviving shots
  double sem = 0.0;
};

/// Runs one experiment per incident mean photon number (no post-selection).
std::vector<PhotonSweepPoint> sweep_photon_number(const ExperimentConfig& base, std::span<const double> alpha_sq);

/// Smallest N with single_shot_sigma / sqrt(N * click_fraction) <= target_sem.
std::uint64_t required_shots(double target_sem, double single_shot_sigma, double click_fraction);

}  // namespace xps
