#include "xps/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "xps/errors.hpp"
#include "xps/units.hpp"

namespace xps {

namespace {

using units::Dimension;

class Reader {
 public:
  explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

  /// Visit the object at `path`, reporting keys that are not in `known`.
  const Json* object(const Json& parent, const std::string& key, const std::string& path,
                     std::initializer_list<const char*> known) {
    if (!parent.contains(key)) return nullptr;
    const Json& obj = parent.at(key);
    if (!obj.is_object()) {
      problems_.push_back(fmt::format("{}: expected an object", path));
      return nullptr;
    }
    check_keys(obj, path, known);
    return &obj;
  }

  void check_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> known) {
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [k, v] : obj.items()) {
      if (!allowed.contains(k)) problems_.push_back(fmt::format("{}{}: unknown key", prefix(path), k));
    }
  }

  void quantity(const Json* obj, const std::string& path, const char* key, Dimension dim, const char* unit,
                double scale_to_target, double& out) {
    if (!obj || !obj->contains(key)) return;
    const Json& v = obj->at(key);
    const std::string where = prefix(path) + key;
    try {
      double si = 0.0;
      if (v.is_number()) {
        si = v.get<double>() * units::unit_scale(unit, dim);
      } else if (v.is_string()) {
        si = units::parse_quantity(v.get<std::string>(), dim, unit);
      } else {
        problems_.push_back(fmt::format("{}: expected a number or a quantity string", where));
        return;
      }
      if (!std::isfinite(si)) {
        problems_.push_back(fmt::format("{}: must be finite", where));
        return;
      }
      out = si * scale_to_target;
    } catch (const Error& e) {
      problems_.push_back(fmt::format("{}: {}", where, e.what()));
    }
  }

  void number(const Json* obj, const std::string& path, const char* key, double& out) {
    if (!obj || !obj->contains(key)) return;
    const Json& v = obj->at(key);
    if (!v.is_number()) {
      problems_.push_back(fmt::format("{}{}: expected a number", prefix(path), key));
      return;
    }
    out = v.get<double>();
  }

  template <typename Int>
  void integer(const Json* obj, const std::string& path, const char* key, Int& out) {
    if (!obj || !obj->contains(key)) return;
    const Json& v = obj->at(key);
    if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) {
      out = static_cast<Int>(v.get<unsigned long long>());
    } else if (v.is_number_float() && v.get<double>() >= 0 && v.get<double>() == std::floor(v.get<double>()) &&
               v.get<double>() < 1.8e19) {
      out = static_cast<Int>(v.get<double>());
    } else {
      problems_.push_back(fmt::format("{}{}: expected a non-negative integer", prefix(path), key));
    }
  }

  void boolean(const Json* obj, const std::string& path, const char* key, bool& out) {
    if (!obj || !obj->contains(key)) return;
    const Json& v = obj->at(key);
    if (!v.is_boolean()) {
      problems_.push_back(fmt::format("{}{}: expected true or false", prefix(path), key));
      return;
    }
    out = v.get<bool>();
  }

  void string(const Json* obj, const std::string& path, const char* key, std::string& out) {
    if (!obj || !obj->contains(key)) return;
    const Json& v = obj->at(key);
    if (!v.is_string()) {
      problems_.push_back(fmt::format("{}{}: expected a string", prefix(path), key));
      return;
    }
    out = v.get<std::string>();
  }

  void add(std::string msg) { problems_.push_back(std::move(msg)); }

 private:
  static std::string prefix(const std::string& path) { return path.empty() ? "" : path + "."; }
  std::vector<std::string>& problems_;
};

constexpr double kAngular = units::kTwoPi;

// Value in interface units that maps back to exactly `si` when read again
// through Reader::quantity, so canonical configs reproduce bit-for-bit.
double interface_value(double si, const char* unit, Dimension dim, double to_target = 1.0) {
  const double scale = units::unit_scale(unit, dim);
  auto forward = [&](double v) { return v * scale * to_target; };
  const double guess = si / (scale * to_target);
  if (forward(guess) == si) return guess;
  double up = guess, down = guess;
  for (int i = 0; i < 16; ++i) {
    up = std::nextafter(up, INFINITY);
    down = std::nextafter(down, -INFINITY);
    if (forward(up) == si) return up;
    if (forward(down) == si) return down;
  }
  return guess;
}

double ns(double s) { return interface_value(s, "ns", Dimension::time); }
double mhz(double hz) { return interface_value(hz, "MHz", Dimension::frequency); }
double mhz_angular(double w) { return interface_value(w, "MHz", Dimension::frequency, kAngular); }
double urad(double r) { return interface_value(r, "urad", Dimension::phase); }
double mrad(double r) { return interface_value(r, "mrad", Dimension::phase); }

}  // namespace

ExperimentConfig config_from_json(const Json& doc) {
  if (!doc.is_object()) throw ValidationError({"config: expected a JSON object"});
  std::vector<std::string> problems;
  Reader rd(problems);
  ExperimentConfig c = default_experiment_config();

  rd.check_keys(doc, "",
                {"label", "n_shots", "seed", "mode", "workers", "shots_per_cycle", "shot_period_ns",
                 "per_photon_phase_urad", "saturation_peak_phase_mrad", "source", "detector", "medium", "demod",
                 "layout", "noise"});
  rd.string(&doc, "", "label", c.label);
  rd.integer(&doc, "", "n_shots", c.n_shots);
  rd.integer(&doc, "", "seed", c.seed);
  rd.integer(&doc, "", "workers", c.workers);
  rd.integer(&doc, "", "shots_per_cycle", c.shots_per_cycle);
  rd.quantity(&doc, "", "shot_period_ns", Dimension::time, "ns", 1.0, c.layout.shot_period);
  rd.quantity(&doc, "", "per_photon_phase_urad", Dimension::phase, "urad", 1.0, c.per_photon_phase);
  rd.quantity(&doc, "", "saturation_peak_phase_mrad", Dimension::phase, "mrad", 1.0, c.saturation_peak_phase);
  if (doc.contains("mode")) {
    std::string mode;
    rd.string(&doc, "", "mode", mode);
    if (!mode.empty()) {
      try {
        c.mode = parse_mode(mode);
      } catch (const Error& e) {
        rd.add(fmt::format("mode: {}", e.what()));
      }
    }
  }

  const Json* src = rd.object(doc, "source", "source", {"mean_photons", "pulse_fwhm_ns", "detuning_MHz"});
  rd.number(src, "source", "mean_photons", c.source.mean_photons);
  rd.quantity(src, "source", "pulse_fwhm_ns", Dimension::time, "ns", 1.0, c.source.pulse_fwhm);
  rd.quantity(src, "source", "detuning_MHz", Dimension::frequency, "MHz", kAngular, c.source.center_detuning);

  const Json* det =
      rd.object(doc, "detector", "detector", {"efficiency", "background_click_prob", "number_resolving"});
  rd.number(det, "detector", "efficiency", c.detector.efficiency);
  rd.number(det, "detector", "background_click_prob", c.detector.background_click_prob);
  rd.boolean(det, "detector", "number_resolving", c.detector.number_resolving);
  if (c.detector.number_resolving) rd.add("detector.number_resolving: the shot engine models a click detector");

  const Json* med = rd.object(doc, "medium", "medium",
                              {"gamma_MHz", "eit_fwhm_MHz", "response_time_ns", "probe_od_change",
                               "signal_od_resonant", "mode_area_ratio"});
  rd.quantity(med, "medium", "gamma_MHz", Dimension::frequency, "MHz", kAngular, c.medium.gamma);
  rd.quantity(med, "medium", "eit_fwhm_MHz", Dimension::frequency, "MHz", kAngular, c.medium.eit_fwhm);
  rd.quantity(med, "medium", "response_time_ns", Dimension::time, "ns", 1.0, c.medium.response_time);
  rd.number(med, "medium", "probe_od_change", c.medium.probe_od_change);
  rd.number(med, "medium", "signal_od_resonant", c.medium.signal_od_resonant);
  rd.number(med, "medium", "mode_area_ratio", c.medium.mode_area_ratio);
  if (med && med->contains("probe_od_change") && !doc.contains("saturation_peak_phase_mrad")) {
    c.saturation_peak_phase = c.medium.probe_od_change / 4.0;
  }

  const Json* dm = rd.object(doc, "demod", "demod",
                             {"beat_frequency_MHz", "analysis_bandwidth_MHz", "sample_rate_MHz", "baseline_window_ns",
                              "decimation", "tag_burst_amplitude", "tag_burst_duration_ns", "tag_threshold"});
  rd.quantity(dm, "demod", "beat_frequency_MHz", Dimension::frequency, "MHz", 1.0, c.demod.beat_frequency);
  rd.quantity(dm, "demod", "analysis_bandwidth_MHz", Dimension::frequency, "MHz", 1.0, c.demod.analysis_bandwidth);
  rd.quantity(dm, "demod", "sample_rate_MHz", Dimension::frequency, "MHz", 1.0, c.demod.sample_rate);
  rd.quantity(dm, "demod", "baseline_window_ns", Dimension::time, "ns", 1.0, c.demod.baseline_window);
  rd.integer(dm, "demod", "decimation", c.demod.decimation);
  rd.number(dm, "demod", "tag_burst_amplitude", c.demod.tag_burst_amplitude);
  rd.quantity(dm, "demod", "tag_burst_duration_ns", Dimension::time, "ns", 1.0, c.demod.tag_burst_duration);
  rd.number(dm, "demod", "tag_threshold", c.demod.tag_threshold);

  const Json* lay =
      rd.object(doc, "layout", "layout", {"pulse_center_ns", "xps_window_start_ns", "xps_window_length_ns"});
  rd.quantity(lay, "layout", "pulse_center_ns", Dimension::time, "ns", 1.0, c.layout.pulse_center);
  rd.quantity(lay, "layout", "xps_window_start_ns", Dimension::time, "ns", 1.0, c.layout.xps_window_start);
  rd.quantity(lay, "layout", "xps_window_length_ns", Dimension::time, "ns", 1.0, c.layout.xps_window_length);

  const Json* nz = rd.object(doc, "noise", "noise",
                             {"enabled", "probe_photons", "technical_noise_mrad", "single_shot_sigma_mrad"});
  rd.boolean(nz, "noise", "enabled", c.noise.enabled);
  rd.number(nz, "noise", "probe_photons", c.noise.probe_photons);
  rd.quantity(nz, "noise", "technical_noise_mrad", Dimension::phase, "mrad", 1.0, c.noise.technical_noise);
  if (nz && nz->contains("single_shot_sigma_mrad")) {
    if (nz->contains("technical_noise_mrad")) {
      rd.add("noise: give technical_noise_mrad or single_shot_sigma_mrad, not both");
    } else {
      double total = 0.0;
      rd.quantity(nz, "noise", "single_shot_sigma_mrad", Dimension::phase, "mrad", 1.0, total);
      if (c.noise.probe_photons > 0.0) {
        try {
          c.noise.technical_noise = NoiseModel::technical_for(total, c.noise.probe_photons);
        } catch (const Error& e) {
          rd.add(fmt::format("noise.single_shot_sigma_mrad: {}", e.what()));
        }
      }
    }
  }

  if (problems.empty()) {
    try {
      c.validate();
    } catch (const ValidationError& e) {
      problems = e.problems();
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["label"] = c.label;
  j["n_shots"] = c.n_shots;
  j["seed"] = c.seed;
  j["mode"] = std::string(mode_name(c.mode));
  j["workers"] = c.workers;
  j["shots_per_cycle"] = c.shots_per_cycle;
  j["shot_period_ns"] = ns(c.layout.shot_period);
  j["per_photon_phase_urad"] = urad(c.per_photon_phase);
  j["saturation_peak_phase_mrad"] = mrad(c.saturation_peak_phase);
  j["source"] = {{"mean_photons", c.source.mean_photons},
                 {"pulse_fwhm_ns", ns(c.source.pulse_fwhm)},
                 {"detuning_MHz", mhz_angular(c.source.center_detuning)}};
  j["detector"] = {{"efficiency", c.detector.efficiency},
                   {"background_click_prob", c.detector.background_click_prob},
                   {"number_resolving", c.detector.number_resolving}};
  j["medium"] = {{"gamma_MHz", mhz_angular(c.medium.gamma)},
                 {"eit_fwhm_MHz", mhz_angular(c.medium.eit_fwhm)},
                 {"response_time_ns", ns(c.medium.response_time)},
                 {"probe_od_change", c.medium.probe_od_change},
                 {"signal_od_resonant", c.medium.signal_od_resonant},
                 {"mode_area_ratio", c.medium.mode_area_ratio}};
  j["demod"] = {{"beat_frequency_MHz", mhz(c.demod.beat_frequency)},
                {"analysis_bandwidth_MHz", mhz(c.demod.analysis_bandwidth)},
                {"sample_rate_MHz", mhz(c.demod.sample_rate)},
                {"baseline_window_ns", ns(c.demod.baseline_window)},
                {"decimation", c.demod.decimation},
                {"tag_burst_amplitude", c.demod.tag_burst_amplitude},
                {"tag_burst_duration_ns", ns(c.demod.tag_burst_duration)},
                {"tag_threshold", c.demod.tag_threshold}};
  j["layout"] = {{"pulse_center_ns", ns(c.layout.pulse_center)},
                 {"xps_window_start_ns", ns(c.layout.xps_window_start)},
                 {"xps_window_length_ns", ns(c.layout.xps_window_length)}};
  j["noise"] = {{"enabled", c.noise.enabled},
                {"probe_photons", c.noise.probe_photons},
                {"technical_noise_mrad", mrad(c.noise.technical_noise)}};
  return j;
}

RunSet load_run_set(const Json& input) {
  const Json& doc = input.is_object() && input.contains("config") ? input.at("config") : input;
  if (!doc.is_object()) throw ValidationError({"config: expected a JSON object"});

  std::vector<Json> docs;
  if (doc.contains("runs")) {
    const Json& runs = doc.at("runs");
    if (!runs.is_array() || runs.empty()) throw ValidationError({"runs: expected a non-empty array"});
    Json base = doc;
    base.erase("runs");
    for (const auto& patch : runs) {
      Json merged = base;
      merged.merge_patch(patch);
      docs.push_back(std::move(merged));
    }
  } else {
    docs.push_back(doc);
  }

  RunSet set;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    try {
      set.runs.push_back(config_from_json(docs[i]));
      set.effective.push_back(config_to_json(set.runs.back()));
    } catch (const ValidationError& e) {
      for (const auto& p : e.problems()) {
        problems.push_back(docs.size() > 1 ? fmt::format("runs[{}].{}", i, p) : p);
      }
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return set;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path));
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError({fmt::format("{}: {}", path, e.what())});
  }
}

}  // namespace xps
