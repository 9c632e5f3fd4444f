#pragma once

// Least-squares fitters for the photon-number slope and the detuning curve.

#include <cstddef>
#include <span>

#include "xps/eit_medium.hpp"

namespace xps {

struct LinearPoint {
  double n = 0.0;
  double phase = 0.0;
  double sem = 0.0;  // 0 means "unknown"; the fit is then unweighted
};

struct LinearFit {
  double slope = 0.0;
  double slope_error = 0.0;
  std::size_t points_used = 0;
  double chi2 = 0.0;
  std::size_t dof = 0;
};

/// Line through the origin fitted to the points with n <= n_cutoff.
LinearFit fit_linear_slope(std::span<const LinearPoint> points, double n_cutoff);

struct DetuningPoint {
  double delta_s = 0.0;  // rad/s
  double phase = 0.0;    // rad
  double sem = 0.0;
};

struct DetuningFit {
  DetuningCurveParams params;
  double phi_m_error = 0.0;
  double d0_error = 0.0;
  double covariance = 0.0;  // cov(phi_m, d0)
  double residual = 0.0;    // weighted sum of squared residuals
  std::size_t dof = 0;
  int iterations = 0;
};

struct DetuningFitOptions {
  int max_iterations = 200;
  double tolerance = 1e-12;
};

DetuningFit fit_detuning_curve(std::span<const DetuningPoint> points, double gamma,
                               const DetuningFitOptions& options = {});

/// Two-sided quantile of Student's t: P(|T| <= q) = confidence.
double student_t_quantile(double confidence, std::size_t dof);

}  // namespace xps
