#include "xps/photon_inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "xps/errors.hpp"

namespace xps {

namespace {

constexpr double kPosteriorTail = 1e-12;

/// log((1 - eta)^n) with the 0 * log(0) = 0 convention.
double log_survival(int n, double eta) {
  if (n == 0) return 0.0;
  if (eta >= 1.0) return -std::numeric_limits<double>::infinity();
  return n * std::log1p(-eta);
}

double log_binomial_pmf(int k, int n, double p) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  if (p <= 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
         k * std::log(p) + (n - k) * std::log1p(-p);
}

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double log_likelihood(int n, const DetectorModel& det, Outcome outcome) {
  const double eta = det.efficiency;
  const double pb = det.background_click_prob;
  switch (outcome.kind) {
    case OutcomeKind::no_click:
      return log_survival(n, eta) + std::log1p(-pb);
    case OutcomeKind::click: {
      // 1 - (1 - eta)^n (1 - pb)
      const double log_dark = log_survival(n, eta) + std::log1p(-pb);
      const double p = -std::expm1(log_dark);
      return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    }
    case OutcomeKind::resolved: {
      const int k = outcome.counts;
      double lp = log_binomial_pmf(k, n, eta) + std::log1p(-pb);
      if (pb > 0.0 && k >= 1) lp = log_add(lp, log_binomial_pmf(k - 1, n, eta) + std::log(pb));
      return lp;
    }
  }
  return -std::numeric_limits<double>::infinity();
}

void check_threshold(const DetectorModel& det) {
  if (det.number_resolving) {
    throw DomainError("click/no-click inference requires a threshold detector");
  }
}

void check_resolving(const DetectorModel& det, int k) {
  if (!det.number_resolving) {
    throw DomainError("count-conditioned inference requires a number-resolving detector");
  }
  if (k < 0) throw DomainError("detector count must be non-negative");
}

double outcome_probability(const CoherentSource& src, const DetectorModel& det, Outcome o) {
  switch (o.kind) {
    case OutcomeKind::no_click: return no_click_probability(src, det);
    case OutcomeKind::click: return click_probability(src, det);
    case OutcomeKind::resolved: return count_probability(src, det, o.counts);
  }
  return 0.0;
}

}  // namespace

void CoherentSource::validate() const {
  if (!(mean_photons >= 0.0) || !std::isfinite(mean_photons)) {
    throw DomainError(fmt::format("mean photon number must be finite and >= 0 (got {})", mean_photons));
  }
  if (!(pulse_fwhm > 0.0)) throw DomainError("pulse duration must be > 0");
  if (!std::isfinite(center_detuning)) throw DomainError("detuning must be finite");
}

void DetectorModel::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) {
    throw DomainError(fmt::format("efficiency must lie in [0, 1] (got {})", efficiency));
  }
  if (!(background_click_prob >= 0.0 && background_click_prob < 1.0)) {
    throw DomainError(fmt::format("background click probability must lie in [0, 1) (got {})",
                                  background_click_prob));
  }
}

std::string Outcome::label() const {
  switch (kind) {
    case OutcomeKind::no_click: return "no-click";
    case OutcomeKind::click: return "click";
    case OutcomeKind::resolved: return fmt::format("k-resolved({})", counts);
  }
  return "?";
}

double Posterior::mean() const {
  double m = 0.0;
  for (std::size_t n = 0; n < probabilities.size(); ++n) m += static_cast<double>(n) * probabilities[n];
  return m;
}

double Posterior::total() const {
  return std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
}

double log_poisson_pmf(int n, double mean) {
  if (n < 0) throw DomainError("photon number must be non-negative");
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("Poisson mean must be finite and >= 0");
  if (mean == 0.0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return -mean + n * std::log(mean) - std::lgamma(n + 1.0);
}

double poisson_pmf(int n, double mean) { return std::exp(log_poisson_pmf(n, mean)); }

int poisson_truncation_bound(double mean, double tail) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("Poisson mean must be finite and >= 0");
  if (!(tail > 0.0)) throw DomainError("tail tolerance must be > 0");
  if (mean == 0.0) return 0;
  const double log_tail = std::log(tail);
  // For j > mean the terms fall at least geometrically with ratio mean/(j+1),
  // so P(N > n) <= p(n+1) / (1 - mean/(n+2)).
  for (int n = static_cast<int>(std::floor(mean));; ++n) {
    const double ratio = mean / (n + 2.0);
    if (ratio >= 1.0) continue;
    const double bound = log_poisson_pmf(n + 1, mean) - std::log1p(-ratio);
    if (bound < log_tail) return n;
  }
}

double no_click_probability(const CoherentSource& src, const DetectorModel& det) {
  src.validate();
  det.validate();
  return std::exp(-det.efficiency * src.mean_photons + std::log1p(-det.background_click_prob));
}

double click_probability(const CoherentSource& src, const DetectorModel& det) {
  src.validate();
  det.validate();
  return -std::expm1(-det.efficiency * src.mean_photons + std::log1p(-det.background_click_prob));
}

double count_probability(const CoherentSource& src, const DetectorModel& det, int k) {
  src.validate();
  det.validate();
  if (k < 0) throw DomainError("detector count must be non-negative");
  // Detected signal photons are Poisson(eta |alpha|^2).
  const double mu = det.efficiency * src.mean_photons;
  const double pb = det.background_click_prob;
  double p = (1.0 - pb) * poisson_pmf(k, mu);
  if (k >= 1) p += pb * poisson_pmf(k - 1, mu);
  return p;
}

Posterior posterior(const CoherentSource& src, const DetectorModel& det, Outcome outcome) {
  src.validate();
  det.validate();
  if (outcome.kind == OutcomeKind::resolved) {
    check_resolving(det, outcome.counts);
  } else {
    check_threshold(det);
  }
  const double p_outcome = outcome_probability(src, det, outcome);
  if (!(p_outcome > 0.0)) {
    throw ImpossibleEventError("outcome '" + outcome.label() + "' has zero probability");
  }

  // Posterior tail beyond n_max is at most the prior tail divided by
  // P(outcome); counts shift the support by at most k.
  const int n_max = poisson_truncation_bound(src.mean_photons, kPosteriorTail * std::min(1.0, p_outcome)) +
                    (outcome.kind == OutcomeKind::resolved ? outcome.counts : 0);

  std::vector<double> log_w(static_cast<std::size_t>(n_max) + 1);
  double log_norm = -std::numeric_limits<double>::infinity();
  for (int n = 0; n <= n_max; ++n) {
    log_w[n] = log_poisson_pmf(n, src.mean_photons) + log_likelihood(n, det, outcome);
    log_norm = log_add(log_norm, log_w[n]);
  }
  if (log_norm == -std::numeric_limits<double>::infinity()) {
    throw ImpossibleEventError("outcome '" + outcome.label() + "' has zero probability");
  }
  Posterior post;
  post.truncation_bound = n_max;
  post.conditioned_on = outcome;
  post.probabilities.resize(log_w.size());
  for (std::size_t n = 0; n < log_w.size(); ++n) post.probabilities[n] = std::exp(log_w[n] - log_norm);
  return post;
}

double inferred_mean(const CoherentSource& src, const DetectorModel& det, Outcome outcome) {
  src.validate();
  det.validate();
  if (outcome.kind == OutcomeKind::resolved) return number_resolving_mean(src, det, outcome.counts);
  check_threshold(det);

  const double a = src.mean_photons;
  const double eta = det.efficiency;
  // The background does not change which photons were present, only the
  // click statistics, so the no-click mean is unaffected by it.
  const double n_no = a * (1.0 - eta);
  if (outcome.kind == OutcomeKind::no_click) return n_no;

  const double p_yes = click_probability(src, det);
  if (!(p_yes > 0.0)) throw ImpossibleEventError("click has zero probability");
  return n_no + eta * a / p_yes;
}

double number_resolving_mean(const CoherentSource& src, const DetectorModel& det, int k) {
  src.validate();
  det.validate();
  check_resolving(det, k);
  if (!(count_probability(src, det, k) > 0.0)) {
    throw ImpossibleEventError(fmt::format("{} counts have zero probability", k));
  }
  const double a = src.mean_photons;
  const double eta = det.efficiency;
  const double mu = eta * a;
  const double pb = det.background_click_prob;
  const double undetected = (1.0 - eta) * a;
  if (k == 0) return undetected;
  if (mu == 0.0) return undetected;  // k == 1 and the count was background
  // E[m | k] for m ~ Poisson(mu), k = m + b: mixture of m = k and m = k - 1
  // with odds r = P(b=1) p(k-1) / (P(b=0) p(k)) = pb k / ((1 - pb) mu).
  const double r = pb * k / ((1.0 - pb) * mu);
  return undetected + (k + r * (k - 1)) / (1.0 + r);
}

double inferred_difference(const CoherentSource& src, const DetectorModel& det) {
  return inferred_mean(src, det, Outcome::click()) - inferred_mean(src, det, Outcome::no_click());
}

}  // namespace xps
