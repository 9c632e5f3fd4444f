// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cli/cli.hpp"
#include "xps/eit_medium.hpp"
#include "xps/errors.hpp"
#include "xps/experiment.hpp"
#include "xps/fitting.hpp"
#include "xps/photon_inference.hpp"
#include "xps/rng.hpp"
#include "xps/units.hpp"

using namespace xps;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

MediumParams reference_medium() {
  MediumParams p;
  p.gamma = units::mhz_to_angular(6.0);
  p.eit_fwhm = units::mhz_to_angular(2.0);
  p.response_time = 250e-9;
  p.probe_od_change = 2.0;
  p.signal_od_resonant = 4.0;
  p.mode_area_ratio = 3000.0;
  return p;
}

const double kDetuning = units::mhz_to_angular(18.0);

double profile_peak(double phi0, double tau, double tau_s) {
  double best = 0.0;
  for (double t = -300e-9; t < 1200e-9; t += 0.05e-9) {
    best = std::max(best, std::abs(xps_profile_value(t, phi0, tau, tau_s)));
  }
  return best;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

// --- criteria ---------------------------------------------------------------

Verdict unity_difference() {
  Verdict v;
  for (double eta : {0.05, 0.2, 0.9}) {
    double worst = 0.0;
    for (double x : {1e-4, 3e-5, 1e-6, 1e-9}) {
      const CoherentSource src{x / eta, 40e-9, 0.0};
      worst = std::max(worst, std::abs(inferred_difference(src, {eta, 0.0, false}) - 1.0));
    }
    v.require(worst <= 1e-4, fmt::format("eta={} max|dn-1|={:.2e}", eta, worst));
  }
  return v;
}

Verdict figure_three() {
  Verdict v;
  const DetectorModel thr{0.2, 0.1, false};
  const DetectorModel res{0.2, 0.1, true};
  double worst_closed = 0.0, worst_identity = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double a = 0.01 * std::pow(500.0, i / 199.0);
    const CoherentSource src{a, 40e-9, 0.0};
    for (auto o : {Outcome::no_click(), Outcome::click()}) {
      const double c = inferred_mean(src, thr, o);
      worst_closed = std::max(worst_closed, std::abs(posterior(src, thr, o).mean() - c) / c);
    }
    for (int k = 0; k <= 3; ++k) {
      const double c = number_resolving_mean(src, res, k);
      worst_closed = std::max(worst_closed, std::abs(posterior(src, res, Outcome::resolved(k)).mean() - c) / c);
    }
    double num = 0.0, den = 0.0;
    for (int k = 1; k <= 60; ++k) {
      const double p = count_probability(src, res, k);
      num += p * number_resolving_mean(src, res, k);
      den += p;
    }
    const double click = inferred_mean(src, thr, Outcome::click());
    worst_identity = std::max(worst_identity, std::abs(num / den - click) / click);
  }
  v.require(worst_closed <= 1e-9, fmt::format("brute vs closed {:.2e}", worst_closed));
  v.require(worst_identity <= 1e-6, fmt::format("weighted-average identity {:.2e}", worst_identity));

  const fs::path dir = fs::path(XPS_TEST_TMP) / "fig3";
  fs::create_directories(dir);
  v.require(cli({"infer", "--eta", "0.2", "--bg", "0.1", "--sweep", (dir / "fig3.csv").string(), "--from", "0.01",
                 "--to", "5"}) == 0,
            "fig3.csv written");
  return v;
}

Verdict medium_constants() {
  Verdict v;
  const auto p = reference_medium();
  const double limit = units::rad_to_urad(harris_hau_limit(p, kDetuning));
  const double phi0 = integrated_xps(p, kDetuning);
  const double peak = units::rad_to_urad(profile_peak(phi0, p.response_time, 40e-9));
  std::vector<double> t;
  for (double x = -400e-9; x <= 15 * 250e-9; x += 0.5e-9) t.push_back(x);
  const auto prof = xps_temporal_profile(t, phi0, p.response_time, 40e-9);
  double integral = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) integral += 0.5 * (t[i] - t[i - 1]) * (prof.phase[i] + prof.phase[i - 1]);
  const double rel = std::abs(integral / phi0 - 1.0);
  v.require(std::abs(limit - 28.0) <= 0.5, fmt::format("limit {:.3f} urad", limit));
  v.require(std::abs(peak - 13.0) <= 1.0, fmt::format("peak {:.3f} urad", peak));
  v.require(rel <= 1e-4, fmt::format("integral rel err {:.2e}", rel));
  return v;
}

Verdict enhancement() {
  Verdict v;
  const double r = profile_peak(1.0, 250e-9, 40e-9) / profile_peak(1.0, 250e-9, 100e-9);
  v.require(std::abs(r - 1.5) <= 0.15, fmt::format("peak ratio {:.4f}", r));
  return v;
}

double signal_mode_std(double probe_photons, std::uint64_t shots, std::uint64_t seed) {
  ExperimentConfig c = default_experiment_config();
  c.mode = SimulationMode::signal;
  c.source.mean_photons = 0.0;
  c.detector.background_click_prob = 0.0;
  c.noise.probe_photons = probe_photons;
  c.noise.technical_noise = 0.0;
  c.n_shots = shots;
  c.seed = seed;
  c.workers = 1;
  const auto s = run_experiment(c);
  return s.sem_all * std::sqrt(static_cast<double>(s.n_noclick));
}

Verdict noise_floor() {
  Verdict v;
  const double sd = signal_mode_std(4500.0, 10'000, 11);
  v.require(std::abs(sd / 0.015 - 1.0) <= 0.05, fmt::format("std {:.3f} mrad at N=4500", sd * 1e3));
  std::vector<double> lx, ly;
  for (double n : {1e3, 3e3, 1e4, 3e4, 1e5}) {
    lx.push_back(std::log(n));
    ly.push_back(std::log(signal_mode_std(n, 5'000, 100 + lx.size())));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / lx.size();
    my += ly[i] / ly.size();
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  v.require(std::abs(slope + 0.5) <= 0.02, fmt::format("exponent {:.4f}", slope));
  return v;
}

ExperimentConfig headline_config() {
  ExperimentConfig c = default_experiment_config();
  c.per_photon_phase = -13e-6;
  c.source.mean_photons = 0.5;
  c.detector.efficiency = 0.2;
  c.detector.background_click_prob = 0.06;
  c.noise.technical_noise = NoiseModel::technical_for(0.05, c.noise.probe_photons);
  c.workers = 8;
  c.seed = 20130808;
  return c;
}

Verdict headline() {
  Verdict v;
  ExperimentConfig c = headline_config();
  c.n_shots = 20'000'000;
  const auto s = run_experiment(c);
  const double expect_diff = c.per_photon_phase * s.delta_n_inf;
  const double n_no = inferred_mean(c.interaction_source(), c.detector, Outcome::no_click());
  const double expect_no = c.per_photon_phase * n_no;
  const double z_diff = (s.delta_phase - expect_diff) / s.sem_delta;
  const double z_est = (s.per_photon_estimate - c.per_photon_phase) / s.per_photon_sem;
  const double z_no = (s.mean_phase_noclick - expect_no) / s.sem_noclick;
  v.require(std::abs(z_diff) <= 3.0, fmt::format("diff {:.2f}+-{:.2f} urad vs {:.2f} (z={:.2f})", s.delta_phase * 1e6,
                                                 s.sem_delta * 1e6, expect_diff * 1e6, z_diff));
  v.require(std::abs(z_est) <= 3.0, fmt::format("per-photon {:.2f}+-{:.2f} urad (z={:.2f})",
                                                s.per_photon_estimate * 1e6, s.per_photon_sem * 1e6, z_est));
  v.require(std::abs(z_no) <= 3.0, fmt::format("no-click {:.2f}+-{:.2f} urad vs {:.2f} (z={:.2f})",
                                               s.mean_phase_noclick * 1e6, s.sem_noclick * 1e6, expect_no * 1e6, z_no));
  v.require(s.n_click + s.n_noclick + s.n_discarded == s.n_shots, "bookkeeping");
  return v;
}

Verdict null_systematics() {
  Verdict v;
  ExperimentConfig vacuum = headline_config();
  vacuum.n_shots = 10'000'000;
  vacuum.source.mean_photons = 0.0;
  vacuum.seed = 7001;
  ExperimentConfig no_atoms = headline_config();
  no_atoms.n_shots = 10'000'000;
  no_atoms.per_photon_phase = 0.0;
  no_atoms.seed = 7002;
  for (const auto* c : {&vacuum, &no_atoms}) {
    const auto s = run_experiment(*c);
    const double z = s.delta_phase / s.sem_delta;
    v.require(std::abs(z) <= 3.0, fmt::format("{} diff {:.2f}+-{:.2f} urad (z={:.2f})",
                                              c == &vacuum ? "|a|^2=0" : "phi=0", s.delta_phase * 1e6,
                                              s.sem_delta * 1e6, z));
  }
  return v;
}

Verdict fit_recovery() {
  Verdict v;
  const double gamma = units::mhz_to_angular(6.0);
  auto make = [&](double phi_m, double d0, double noise, std::uint64_t seed) {
    CounterRng rng(seed, 0);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<DetuningPoint> pts;
    for (int i = 0; i < 20; ++i) {
      const double d = units::mhz_to_angular(-40.0 + 80.0 * (i + 0.5) / 20.0);
      pts.push_back({d, xps_vs_detuning(d, {phi_m, d0}, gamma) + noise * z(rng), 0.0});
    }
    return pts;
  };

  for (auto [phi, d0] : {std::pair{500e-6, 4.0}, std::pair{300e-6, 5.0}}) {
    const auto f = fit_detuning_curve(make(phi, d0, 0.0, 1), gamma);
    const double e = std::max(std::abs(f.params.phi_m / phi - 1), std::abs(f.params.d0 / d0 - 1));
    v.require(e <= 1e-6, fmt::format("noiseless ({:.0f} urad, {}) rel err {:.1e}", phi * 1e6, d0, e));
  }

  for (auto [phi, d0] : {std::pair{500e-6, 4.0}, std::pair{300e-6, 5.0}}) {
    int cover_phi = 0, cover_d0 = 0, failures = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
      try {
        const auto f = fit_detuning_curve(make(phi, d0, 0.1 * phi, 1000 + rep), gamma);
        const double q = student_t_quantile(0.95, f.dof);
        cover_phi += std::abs(f.params.phi_m - phi) <= q * f.phi_m_error;
        cover_d0 += std::abs(f.params.d0 - d0) <= q * f.d0_error;
      } catch (const FitError&) {
        ++failures;
      }
    }
    v.require(cover_phi >= 90 && cover_phi <= 100 && cover_d0 >= 90 && cover_d0 <= 100 && failures == 0,
              fmt::format("coverage ({:.0f} urad, {}) phi_m {}/100 d0 {}/100", phi * 1e6, d0, cover_phi, cover_d0));
  }

  ExperimentConfig c = default_experiment_config();
  c.per_photon_phase = 13e-6;
  c.noise.probe_photons = 1e8;
  c.noise.technical_noise = 0.0;
  c.n_shots = 200'000;
  c.workers = 8;
  const std::vector<double> alpha{0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  std::vector<LinearPoint> pts;
  for (const auto& p : sweep_photon_number(c, alpha)) pts.push_back({p.n, p.phase * 1e6, p.sem * 1e6});
  const auto lf = fit_linear_slope(pts, 3.0);
  const double q = student_t_quantile(0.95, lf.dof);
  v.require(std::abs(lf.slope - 13.0) <= q * lf.slope_error && lf.slope_error <= 1.0,
            fmt::format("linear slope {:.3f}+-{:.3f} urad/photon", lf.slope, lf.slope_error));
  return v;
}

Verdict determinism() {
  Verdict v;
  const fs::path root = fs::path(XPS_TEST_TMP) / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "cfg.json") << R"({
    "n_shots": 300000,
    "seed": 424242,
    "noise": {"single_shot_sigma_mrad": 50},
    "runs": [{"label": "headline"}, {"label": "vacuum", "source": {"mean_photons": 0}},
             {"label": "no-atoms", "per_photon_phase_urad": 0}]
  })";
  std::ofstream(root / "sweep.json") << R"({"seed": 99, "noise": {"single_shot_sigma_mrad": 50}})";
  std::vector<std::string> fig4, records, fig2;
  for (const char* w : {"1", "4", "8"}) {
    const fs::path dir = root / fmt::format("w{}", w);
    const bool ok = cli({"simulate", "--config", (root / "cfg.json").string(), "--workers", w, "--out-dir",
                         dir.string(), "--records", (dir / "records.csv").string()}) == 0 &&
                    cli({"sweep", "--config", (root / "sweep.json").string(), "--workers", w, "--out-dir",
                         (dir / "sweep").string(), "--shots", "300000", "--alpha-sq", "0.5,1,2"}) == 0;
    v.require(ok, fmt::format("workers={} ran", w));
    fig4.push_back(slurp(dir / "fig4.csv"));
    records.push_back(slurp(dir / "records.csv"));
    fig2.push_back(slurp(dir / "sweep" / "fig2.csv"));
  }
  const bool same = fig4[0] == fig4[1] && fig4[0] == fig4[2] && records[0] == records[1] &&
                    records[0] == records[2] && fig2[0] == fig2[1] && fig2[0] == fig2[2] && !fig4[0].empty();
  v.require(same, fmt::format("fig4/fig2/records identical across workers 1,4,8 ({} record bytes)", records[0].size()));
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> all{
      {1, "unity-difference law", unity_difference},
      {2, "inference curves and weighted-average identity", figure_three},
      {3, "medium constants", medium_constants},
      {4, "pulse-duration enhancement", enhancement},
      {5, "interferometric noise floor", noise_floor},
      {6, "end-to-end per-photon estimate", headline},
      {7, "null systematics", null_systematics},
      {8, "fit recovery", fit_recovery},
      {9, "determinism across worker counts", determinism},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << fmt::format("{} criterion {}: {} ({}) [{:.1f} s]\n", v.pass ? "PASS" : "FAIL", c.id, c.name,
                             v.detail, secs)
              << std::flush;
    failed += !v.pass;
  }
  std::cout << fmt::format("{}/{} criteria passed\n", all.size() - failed, all.size());
  return failed ? 1 : 0;
}
