#pragma once

// JSON configuration files for simulation runs.
//
// Keys carry their unit in the name (detuning_MHz, pulse_fwhm_ns, ...). A
// value may be a plain number in that unit or a string with an explicit unit
// ("18 MHz", "0.04 us"). Unknown keys are rejected.

#include <string>
#include <vector>

#include <json.hpp>

#include "xps/experiment.hpp"

namespace xps {

using Json = nlohmann::ordered_json;

/// Builds a config on top of default_experiment_config(). Every problem
/// found is reported in one ValidationError.
ExperimentConfig config_from_json(const Json& doc);

/// Canonical JSON form (interface units); config_from_json round-trips it.
Json config_to_json(const ExperimentConfig& config);

struct RunSet {
  std::vector<ExperimentConfig> runs;
  std::vector<Json> effective;  // canonical JSON of each run
};

/// Accepts a single config object, an object with a "runs" array of
/// overrides applied as JSON merge patches to the remaining keys, or a run
/// manifest (an object with a "config" key holding either of those).
RunSet load_run_set(const Json& doc);

Json read_json_file(const std::string& path);

}  // namespace xps
