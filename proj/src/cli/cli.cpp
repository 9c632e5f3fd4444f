#include "cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cli/manifest.hpp"
#include "xps/config.hpp"
#include "xps/eit_medium.hpp"
#include "xps/errors.hpp"
#include "xps/experiment.hpp"
#include "xps/fitting.hpp"
#include "xps/photon_inference.hpp"
#include "xps/rng.hpp"
#include "xps/trace_io.hpp"
#include "xps/units.hpp"
#include "xps/version.hpp"

namespace xps::cli {

namespace fs = std::filesystem;
using units::Dimension;

namespace {

// Quantity flags are collected as text and converted after parsing.
double quantity(const std::string& text, Dimension dim, const char* unit, const char* flag) {
  try {
    return units::parse_quantity(text, dim, unit);
  } catch (const Error& e) {
    throw ValidationError({fmt::format("{}: {}", flag, e.what())});
  }
}

double angular(const std::string& text, const char* flag) {
  return units::kTwoPi * quantity(text, Dimension::frequency, "MHz", flag);
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  return out;
}

std::string num(double v) { return std::isfinite(v) ? fmt::format("{:.10g}", v) : "nan"; }

// --- CSV input --------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;
};

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({fmt::format("cannot open '{}'", path.string())});
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ValidationError({fmt::format("{}:{}: expected {} columns, found {}", path.string(), lineno,
                                         t.header.size(), cells.size())});
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != c.size() || !std::isfinite(v)) {
        throw ValidationError({fmt::format("{}:{}: '{}' is not a number", path.string(), lineno, c)});
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
    t.lines.push_back(lineno);
  }
  if (t.header.empty()) throw ValidationError({fmt::format("{}: empty file", path.string())});
  return t;
}

std::size_t column(const CsvTable& t, const std::string& name, const fs::path& path) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw ValidationError({fmt::format("{}:1: missing column '{}'", path.string(), name)});
  return static_cast<std::size_t>(it - t.header.begin());
}

std::optional<std::size_t> optional_column(const CsvTable& t, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - t.header.begin());
}

// --- infer ------------------------------------------------------------------

struct InferArgs {
  double alpha_sq = 0.5;
  double eta = 0.2;
  double bg = 0.0;
  std::string outcome = "both";
  std::optional<int> k;
  std::uint64_t mc_check = 0;
  std::uint64_t seed = 1;
  std::string sweep_out;
  int points = 100;
  double sweep_min = 0.01, sweep_max = 5.0;
};

double monte_carlo_mean(const CoherentSource& src, const DetectorModel& det, Outcome outcome, std::uint64_t shots,
                        std::uint64_t seed, std::uint64_t& accepted) {
  RunningStats stats;
  for (std::uint64_t i = 0; i < shots; ++i) {
    CounterRng rng(seed, i);
    const auto n = src.mean_photons > 0 ? std::poisson_distribution<int>(src.mean_photons)(rng) : 0;
    const int detected = n > 0 ? std::binomial_distribution<int>(n, det.efficiency)(rng) : 0;
    const int bg = rng.uniform() < det.background_click_prob ? 1 : 0;
    bool keep = false;
    switch (outcome.kind) {
      case OutcomeKind::no_click: keep = detected + bg == 0; break;
      case OutcomeKind::click: keep = detected + bg > 0; break;
      case OutcomeKind::resolved: keep = detected + bg == outcome.counts; break;
    }
    if (keep) stats.add(n);
  }
  accepted = stats.count();
  return stats.mean();
}

int cmd_infer(const InferArgs& a, std::ostream& out) {
  DetectorModel det{a.eta, a.bg, false};
  det.validate();
  if (!a.sweep_out.empty()) {
    if (a.points < 2 || !(a.sweep_min > 0.0) || !(a.sweep_max > a.sweep_min)) {
      throw ValidationError({"sweep: need --points >= 2 and 0 < --from < --to"});
    }
    auto file = open_output(a.sweep_out);
    file << "alpha_sq,n_inf_no,n_inf_yes,n_inf_k0,n_inf_k1,n_inf_k2,n_inf_k3\n";
    DetectorModel resolving = det;
    resolving.number_resolving = true;
    for (int i = 0; i < a.points; ++i) {
      const double x = a.sweep_min * std::pow(a.sweep_max / a.sweep_min, static_cast<double>(i) / (a.points - 1));
      const CoherentSource src{x, 40e-9, 0.0};
      file << num(x) << ',' << num(inferred_mean(src, det, Outcome::no_click())) << ','
           << num(inferred_mean(src, det, Outcome::click()));
      for (int k = 0; k <= 3; ++k) file << ',' << num(number_resolving_mean(src, resolving, k));
      file << '\n';
    }
    out << fmt::format("wrote {} ({} points)\n", a.sweep_out, a.points);
    return kOk;
  }

  const CoherentSource src{a.alpha_sq, 40e-9, 0.0};
  src.validate();
  std::vector<Outcome> outcomes;
  if (a.k) {
    det.number_resolving = true;
    outcomes.push_back(Outcome::resolved(*a.k));
  } else if (a.outcome == "click") {
    outcomes.push_back(Outcome::click());
  } else if (a.outcome == "noclick" || a.outcome == "no-click") {
    outcomes.push_back(Outcome::no_click());
  } else {
    outcomes = {Outcome::no_click(), Outcome::click()};
  }

  out << "outcome,probability,closed_form,brute_force" << (a.mc_check ? ",monte_carlo,mc_samples" : "") << '\n';
  for (const auto& o : outcomes) {
    const double p = o.kind == OutcomeKind::resolved ? count_probability(src, det, o.counts)
                     : o.kind == OutcomeKind::click  ? click_probability(src, det)
                                                     : no_click_probability(src, det);
    const double closed = inferred_mean(src, det, o);
    const double brute = posterior(src, det, o).mean();
    out << o.label() << ',' << num(p) << ',' << num(closed) << ',' << num(brute);
    if (a.mc_check) {
      std::uint64_t accepted = 0;
      const double mc = monte_carlo_mean(src, det, o, a.mc_check, a.seed, accepted);
      out << ',' << num(mc) << ',' << accepted;
    }
    out << '\n';
  }
  if (!a.k && outcomes.size() == 2) {
    out << fmt::format("# difference (click - no-click): {}\n", num(inferred_difference(src, det)));
  }
  return kOk;
}

// --- medium -----------------------------------------------------------------

struct MediumArgs {
  std::string gamma = "6", eit_fwhm = "2", tau = "250", pulse = "40", detuning = "18";
  double od = 2.0, d0 = 4.0, area_ratio = 3000.0;
  bool limit = false, profile = false, neff = false, curve = false;
  double n0 = 1.0;
  std::string phi_m = "500";
  std::string from = "-60", to = "60";
  int points = 121;
  std::string out_path;
};

int cmd_medium(const MediumArgs& a, std::ostream& out) {
  const int modes = int(a.limit) + int(a.profile) + int(a.neff) + int(a.curve);
  if (modes != 1) throw ValidationError({"medium: choose exactly one of --limit, --profile, --neff, --curve"});
  MediumParams p;
  p.gamma = angular(a.gamma, "--gamma");
  p.eit_fwhm = angular(a.eit_fwhm, "--eit-fwhm");
  p.response_time = quantity(a.tau, Dimension::time, "ns", "--tau");
  p.probe_od_change = a.od;
  p.signal_od_resonant = a.d0;
  p.mode_area_ratio = a.area_ratio;
  const double delta = angular(a.detuning, "--detuning");

  std::ofstream file;
  std::ostream* sink = &out;
  if (!a.out_path.empty()) {
    file = open_output(a.out_path);
    sink = &file;
  }

  if (a.limit) {
    p.validate();
    out << "phi0_rad_s,limit_urad,integrated_over_tau_urad\n";
    const double phi0 = integrated_xps(p, delta);
    out << num(phi0) << ',' << num(units::rad_to_urad(harris_hau_limit(p, delta))) << ','
        << num(units::rad_to_urad(phi0 / p.response_time)) << '\n';
  } else if (a.neff) {
    out << "n0,signal_od,n_eff\n";
    out << num(a.n0) << ',' << num(signal_optical_density(delta, a.d0, p.gamma)) << ','
        << num(effective_photon_number(a.n0, delta, a.d0, p.gamma)) << '\n';
  } else if (a.profile) {
    p.validate();
    const double tau_s = quantity(a.pulse, Dimension::time, "ns", "--pulse");
    const double phi0 = integrated_xps(p, delta);
    std::vector<double> grid;
    for (double t = -400e-9; t <= 1600e-9 + 1e-15; t += 2e-9) grid.push_back(t);
    const XpsProfile prof = xps_temporal_profile(grid, phi0, p.response_time, tau_s);
    *sink << "time_ns,phase_urad\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      *sink << num(units::s_to_ns(grid[i])) << ',' << num(units::rad_to_urad(prof.phase[i])) << '\n';
    }
  } else {
    const DetuningCurveParams cp{quantity(a.phi_m, Dimension::phase, "urad", "--phi-m"), a.d0};
    const double lo = angular(a.from, "--from"), hi = angular(a.to, "--to");
    if (a.points < 2 || !(hi > lo)) throw ValidationError({"--curve: need --points >= 2 and --from < --to"});
    *sink << "detuning_MHz,phase_urad\n";
    for (int i = 0; i < a.points; ++i) {
      const double d = lo + (hi - lo) * i / (a.points - 1);
      if (d == 0.0) continue;
      *sink << num(units::angular_to_mhz(d)) << ',' << num(units::rad_to_urad(xps_vs_detuning(d, cp, p.gamma)))
            << '\n';
    }
  }
  return kOk;
}

// --- simulate / sweep -------------------------------------------------------

struct SimArgs {
  std::string config_path;
  std::optional<std::uint64_t> shots, seed;
  std::optional<std::string> mode;
  std::optional<unsigned> workers;
  std::string out_dir = ".";
  std::string records_path;
};

Json load_input(const std::string& path) { return path.empty() ? Json::object() : read_json_file(path); }

Json apply_overrides(Json doc, const SimArgs& a) {
  Json patch = Json::object();
  if (a.shots) patch["n_shots"] = *a.shots;
  if (a.seed) patch["seed"] = *a.seed;
  if (a.mode) patch["mode"] = *a.mode;
  if (a.workers) patch["workers"] = *a.workers;
  if (patch.empty()) return doc;
  Json& body = doc.contains("config") ? doc["config"] : doc;
  body.merge_patch(patch);
  if (body.contains("runs") && body["runs"].is_array()) {
    for (auto& r : body["runs"]) r.merge_patch(patch);
  }
  return doc;
}

int cmd_simulate(const SimArgs& a, std::ostream& out) {
  RunManifest manifest;
  manifest.command = "simulate";
  manifest.started_at = utc_timestamp();
  Json doc = apply_overrides(load_input(a.config_path), a);
  if (doc.contains("config")) doc = doc.at("config");
  const RunSet set = load_run_set(doc);
  manifest.config = doc;
  manifest.effective = set.effective;

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const fs::path fig4 = dir / "fig4.csv";
  std::ofstream records;
  if (!a.records_path.empty()) {
    records = open_output(a.records_path);
    records << "label,shot_index,cycle,incident_photons,true_photons,click,discarded,phase_rad\n";
  }

  std::vector<AggregateStats> results;
  for (const auto& cfg : set.runs) {
    manifest.seeds.push_back(cfg.seed);
    RecordSink sink;
    if (records.is_open()) {
      sink = [&](std::span<const ShotRecord> rs) {
        for (const auto& r : rs) {
          records << cfg.label << ',' << r.shot_index << ',' << r.cycle << ',' << r.incident_photons << ','
                  << r.true_photons << ',' << int(r.click) << ',' << int(r.discarded) << ','
                  << fmt::format("{:.17g}", r.phase_sample) << '\n';
        }
      };
    }
    results.push_back(run_experiment(cfg, sink));
    const auto& s = results.back();
    out << fmt::format(
        "{}: {} shots, {} click / {} no-click / {} discarded, click {} +- {} urad, no-click {} +- {} urad, "
        "per-photon {} +- {} urad\n",
        s.label, s.n_shots, s.n_click, s.n_noclick, s.n_discarded, num(units::rad_to_urad(s.mean_phase_click)),
        num(units::rad_to_urad(s.sem_click)), num(units::rad_to_urad(s.mean_phase_noclick)),
        num(units::rad_to_urad(s.sem_noclick)), num(units::rad_to_urad(s.per_photon_estimate)),
        num(units::rad_to_urad(s.per_photon_sem)));
    if (cfg.mode == SimulationMode::signal) out << fmt::format("  tag mismatches: {}\n", s.tag_mismatches);
  }

  {
    auto file = open_output(fig4);
    file << "label,phase_click,sem_click,phase_noclick,sem_noclick,delta_n_inf,per_photon\n";
    for (const auto& s : results) {
      file << s.label << ',' << num(units::rad_to_urad(s.mean_phase_click)) << ','
           << num(units::rad_to_urad(s.sem_click)) << ',' << num(units::rad_to_urad(s.mean_phase_noclick)) << ','
           << num(units::rad_to_urad(s.sem_noclick)) << ',' << num(s.delta_n_inf) << ','
           << num(units::rad_to_urad(s.per_photon_estimate)) << '\n';
    }
  }
  if (records.is_open()) records.close();

  manifest.outputs.push_back(digest_output(fig4));
  if (!a.records_path.empty()) manifest.outputs.push_back(digest_output(a.records_path));
  manifest.finished_at = utc_timestamp();
  auto mfile = open_output(dir / "manifest.json");
  mfile << manifest.to_json().dump(2) << '\n';
  out << fmt::format("wrote {} and {}\n", fig4.string(), (dir / "manifest.json").string());
  return kOk;
}

struct SweepArgs {
  SimArgs sim;
  std::vector<double> alpha_sq;
  double from = 0.1, to = 10.0;
  int points = 12;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  RunManifest manifest;
  manifest.command = "sweep";
  manifest.started_at = utc_timestamp();
  Json doc = apply_overrides(load_input(a.sim.config_path), a.sim);
  if (doc.contains("config")) doc = doc.at("config");
  const RunSet set = load_run_set(doc);
  if (set.runs.size() != 1) throw ValidationError({"sweep: the config must describe a single run"});
  manifest.config = doc;
  manifest.effective = set.effective;
  manifest.seeds.push_back(set.runs[0].seed);

  std::vector<double> grid = a.alpha_sq;
  if (grid.empty()) {
    if (a.points < 2 || !(a.to > a.from) || !(a.from >= 0.0)) {
      throw ValidationError({"sweep: need --points >= 2 and 0 <= --from < --to"});
    }
    for (int i = 0; i < a.points; ++i) grid.push_back(a.from + (a.to - a.from) * i / (a.points - 1));
  }
  const auto pts = sweep_photon_number(set.runs[0], grid);

  const fs::path dir(a.sim.out_dir);
  const fs::path fig2 = dir / "fig2.csv";
  {
    auto file = open_output(fig2);
    file << "n,phase_urad,sem\n";
    for (const auto& p : pts) {
      file << num(p.n) << ',' << num(units::rad_to_urad(p.phase)) << ',' << num(units::rad_to_urad(p.sem)) << '\n';
    }
  }
  manifest.outputs.push_back(digest_output(fig2));
  manifest.finished_at = utc_timestamp();
  auto mfile = open_output(dir / "manifest.json");
  mfile << manifest.to_json().dump(2) << '\n';
  out << fmt::format("wrote {} ({} points)\n", fig2.string(), pts.size());
  return kOk;
}

// --- fit --------------------------------------------------------------------

struct FitArgs {
  bool linear = false, detuning = false;
  std::string input;
  double cutoff = 3.0;
  std::string gamma = "6";
  std::string out_path;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  if (a.linear == a.detuning) throw ValidationError({"fit: choose exactly one of --linear, --detuning"});
  const CsvTable t = read_csv(a.input);
  Json report;
  if (a.linear) {
    const auto cn = column(t, "n", a.input), cp = column(t, "phase_urad", a.input);
    const auto cs = optional_column(t, "sem");
    std::vector<LinearPoint> pts;
    for (const auto& r : t.rows) pts.push_back({r[cn], r[cp], cs ? r[*cs] : 0.0});
    const LinearFit f = fit_linear_slope(pts, a.cutoff);
    report = {{"model", "linear"},         {"slope_urad_per_photon", f.slope}, {"slope_error", f.slope_error},
              {"points_used", f.points_used}, {"chi2", f.chi2},                {"dof", f.dof}};
  } else {
    const double gamma = angular(a.gamma, "--gamma");
    const auto cd = column(t, "detuning_MHz", a.input), cp = column(t, "phase_urad", a.input);
    const auto cs = optional_column(t, "sem");
    std::vector<DetuningPoint> pts;
    for (const auto& r : t.rows) {
      pts.push_back({units::mhz_to_angular(r[cd]), units::urad_to_rad(r[cp]), cs ? units::urad_to_rad(r[*cs]) : 0.0});
    }
    const DetuningFit f = fit_detuning_curve(pts, gamma);
    report = {{"model", "detuning"},
              {"phi_m_urad", units::rad_to_urad(f.params.phi_m)},
              {"phi_m_error_urad", units::rad_to_urad(f.phi_m_error)},
              {"d0", f.params.d0},
              {"d0_error", f.d0_error},
              {"residual", f.residual},
              {"dof", f.dof},
              {"iterations", f.iterations}};
    if (!a.out_path.empty()) {
      auto file = open_output(a.out_path);
      file << "detuning_MHz,phase_urad,model_fit\n";
      for (std::size_t i = 0; i < pts.size(); ++i) {
        file << num(t.rows[i][cd]) << ',' << num(t.rows[i][cp]) << ','
             << num(units::rad_to_urad(xps_vs_detuning(pts[i].delta_s, f.params, gamma))) << '\n';
      }
    }
  }
  out << report.dump(2) << '\n';
  return kOk;
}

// --- trace / plan -----------------------------------------------------------

struct TraceArgs {
  std::string config_path;
  double photons = 1.0;
  bool tag = false;
  bool no_noise = false;
  std::uint64_t seed = 1;
  std::string out_path = "trace.bin";
  std::string csv_path;
};

int cmd_trace(const TraceArgs& a, std::ostream& out) {
  const RunSet set = load_run_set(load_input(a.config_path));
  const ExperimentConfig& cfg = set.runs.front();
  if (!(a.photons >= 0.0)) throw ValidationError({"--photons: must be >= 0"});
  const ShotProcessor proc(cfg.demod, cfg.layout);
  std::vector<double> grid;
  for (std::size_t k = 0; k < proc.slot_samples(); ++k) {
    grid.push_back(static_cast<double>(k) / cfg.demod.sample_rate - cfg.layout.pulse_center);
  }
  const double phi0 = integrated_xps(cfg.medium, cfg.source.center_detuning);
  const XpsProfile unit = xps_temporal_profile(grid, phi0, cfg.medium.response_time, cfg.source.pulse_fwhm);
  XpsProfile prof = unit;
  for (auto& v : prof.phase) v *= a.photons;
  prof.integrated *= a.photons;

  CounterRng rng(a.seed, 0, 1);
  SynthesisOptions opts;
  opts.noise = !a.no_noise;
  opts.technical_noise = cfg.noise.technical_noise;
  const BeatTrace trace = synthesize_trace(prof, cfg.noise.probe_photons, cfg.demod, cfg.layout, a.tag, rng, opts);
  write_trace(fs::path(a.out_path), trace);
  if (!a.csv_path.empty()) {
    auto file = open_output(a.csv_path);
    write_demod_csv(file, demodulate(trace, cfg.demod));
  }
  const auto est = analyze_trace(trace, cfg.demod, cfg.layout);
  out << "slot,phase_urad,uncertainty_urad,amplitude,tag\n";
  for (std::size_t i = 0; i < est.size(); ++i) {
    out << i << ',' << num(units::rad_to_urad(est[i].phase)) << ',' << num(units::rad_to_urad(est[i].uncertainty))
        << ',' << num(est[i].amplitude) << ',' << int(est[i].tag_detected) << '\n';
  }
  return kOk;
}

struct PlanArgs {
  std::string target = "6", sigma = "50";
  double click_fraction = 1.0;
};

int cmd_plan(const PlanArgs& a, std::ostream& out) {
  const double target = quantity(a.target, Dimension::phase, "urad", "--target");
  const double sigma = quantity(a.sigma, Dimension::phase, "mrad", "--sigma");
  out << required_shots(target, sigma, a.click_fraction) << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Post-selected cross-phase-shift simulator", "xpsim"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  InferArgs ia;
  auto* infer = app.add_subcommand("infer", "Photon-number inference from detector outcomes");
  infer->add_option("--alpha-sq", ia.alpha_sq, "Mean photon number |alpha|^2");
  infer->add_option("--eta", ia.eta, "Detection efficiency");
  infer->add_option("--bg", ia.bg, "Background click probability per gate");
  infer->add_option("--outcome", ia.outcome, "click, noclick or both")
      ->check(CLI::IsMember({"click", "noclick", "no-click", "both"}));
  infer->add_option("--k", ia.k, "Detected count for a number-resolving detector")->check(CLI::NonNegativeNumber);
  infer->add_option("--mc-check", ia.mc_check, "Monte-Carlo check with N samples");
  infer->add_option("--seed", ia.seed, "Seed for --mc-check");
  infer->add_option("--sweep", ia.sweep_out, "Write the inference sweep CSV to this path");
  infer->add_option("--points", ia.points, "Sweep points");
  infer->add_option("--from", ia.sweep_min, "Sweep start |alpha|^2");
  infer->add_option("--to", ia.sweep_max, "Sweep end |alpha|^2");

  MediumArgs ma;
  auto* medium = app.add_subcommand("medium", "EIT medium formulas");
  medium->add_flag("--limit", ma.limit, "Integrated XPS and the per-photon bound");
  medium->add_flag("--profile", ma.profile, "Single-photon temporal XPS profile (CSV)");
  medium->add_flag("--neff", ma.neff, "Photons surviving signal absorption");
  medium->add_flag("--curve", ma.curve, "XPS versus signal detuning (CSV)");
  medium->add_option("--gamma", ma.gamma, "Excited-state linewidth [MHz]");
  medium->add_option("--eit-fwhm", ma.eit_fwhm, "EIT window FWHM [MHz]");
  medium->add_option("--tau", ma.tau, "Medium response time [ns]");
  medium->add_option("--pulse", ma.pulse, "Signal pulse duration [ns]");
  medium->add_option("--detuning", ma.detuning, "Signal detuning [MHz]");
  medium->add_option("--od", ma.od, "Probe OD change d");
  medium->add_option("--d0", ma.d0, "Resonant signal OD d0");
  medium->add_option("--area-ratio", ma.area_ratio, "Mode area over atomic cross-section");
  medium->add_option("--n0", ma.n0, "Incident photon number for --neff");
  medium->add_option("--phi-m", ma.phi_m, "Curve scale [urad]");
  medium->add_option("--from", ma.from, "Curve start detuning [MHz]");
  medium->add_option("--to", ma.to, "Curve end detuning [MHz]");
  medium->add_option("--points", ma.points, "Curve points");
  medium->add_option("--out", ma.out_path, "Write CSV here instead of stdout");

  SimArgs sa;
  auto add_sim_options = [](CLI::App* cmd, SimArgs& s) {
    cmd->add_option("--config", s.config_path, "JSON config or run manifest");
    cmd->add_option("--shots", s.shots, "Number of shots");
    cmd->add_option("--seed", s.seed, "Random seed");
    cmd->add_option("--mode", s.mode, "statistical or signal")->check(CLI::IsMember({"statistical", "signal"}));
    cmd->add_option("--workers", s.workers, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--out-dir", s.out_dir, "Output directory");
  };
  auto* simulate = app.add_subcommand("simulate", "Run the post-selected experiment");
  add_sim_options(simulate, sa);
  simulate->add_option("--records", sa.records_path, "Also write every shot record to this CSV");

  SweepArgs wa;
  auto* sweep = app.add_subcommand("sweep", "Mean XPS versus photon number");
  add_sim_options(sweep, wa.sim);
  sweep->add_option("--alpha-sq", wa.alpha_sq, "Explicit list of mean photon numbers")->delimiter(',');
  sweep->add_option("--from", wa.from, "First mean photon number");
  sweep->add_option("--to", wa.to, "Last mean photon number");
  sweep->add_option("--points", wa.points, "Number of points");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit slope or detuning curve from CSV");
  fit->add_flag("--linear", fa.linear, "Slope through the origin (columns n,phase_urad[,sem])");
  fit->add_flag("--detuning", fa.detuning, "Detuning curve (columns detuning_MHz,phase_urad[,sem])");
  fit->add_option("--input", fa.input, "Input CSV")->required();
  fit->add_option("--cutoff", fa.cutoff, "Largest n used by --linear");
  fit->add_option("--gamma", fa.gamma, "Excited-state linewidth [MHz]");
  fit->add_option("--out", fa.out_path, "Write data with model column (--detuning)");

  TraceArgs ta;
  auto* trace = app.add_subcommand("trace", "Synthesize and dump one probe trace");
  trace->add_option("--config", ta.config_path, "JSON config");
  trace->add_option("--photons", ta.photons, "Signal photons in the shot");
  trace->add_flag("--tag", ta.tag, "Append a tagged follow-up slot");
  trace->add_flag("--no-noise", ta.no_noise, "Disable detection noise");
  trace->add_option("--seed", ta.seed, "Random seed");
  trace->add_option("--out", ta.out_path, "Binary trace output");
  trace->add_option("--csv", ta.csv_path, "Demodulated series CSV output");

  PlanArgs pa;
  auto* plan = app.add_subcommand("plan", "Shots needed for a target phase error");
  plan->add_option("--target", pa.target, "Target standard error [urad]");
  plan->add_option("--sigma", pa.sigma, "Single-shot phase sigma [mrad]");
  plan->add_option("--click-fraction", pa.click_fraction, "Fraction of shots in the population");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (infer->parsed()) return cmd_infer(ia, out);
    if (medium->parsed()) return cmd_medium(ma, out);
    if (simulate->parsed()) return cmd_simulate(sa, out);
    if (sweep->parsed()) return cmd_sweep(wa, out);
    if (fit->parsed()) return cmd_fit(fa, out);
    if (trace->parsed()) return cmd_trace(ta, out);
    if (plan->parsed()) return cmd_plan(pa, out);
  } catch (const ValidationError& e) {
    err << "error: invalid input\n";
    for (const auto& p : e.problems()) err << "  " << p << '\n';
    return kValidation;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}

}  // namespace xps::cli
