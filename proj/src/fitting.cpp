#include "xps/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "xps/errors.hpp"

namespace xps {

namespace {

bool all_weighted(auto const& pts) {
  return std::all_of(pts.begin(), pts.end(), [](const auto& p) { return p.sem > 0.0; });
}

// Derivative of (1 - e^-d)/d with respect to d.
double absorption_factor_slope(double d) {
  if (d < 1e-4) return -0.5 + d / 3.0 - d * d / 8.0;
  return (std::exp(-d) * (1.0 + d) - 1.0) / (d * d);
}

struct CurveTerms {
  double lorentz;  // dispersive factor, phi = phi_m * lorentz * F(d0 g)
  double g;
};

CurveTerms curve_terms(double delta, double gamma) {
  const double half = 0.5 * gamma;
  return {-2.0 * delta * half / (delta * delta + half * half), gamma * gamma / (4.0 * delta * delta + gamma * gamma)};
}

struct Problem {
  std::vector<CurveTerms> terms;
  Eigen::VectorXd y, w;

  double model(std::size_t i, double phi_m, double d0) const {
    return phi_m * terms[i].lorentz * absorption_factor(d0 * terms[i].g);
  }

  double cost(double phi_m, double d0) const {
    double s = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const double r = y[static_cast<Eigen::Index>(i)] - model(i, phi_m, d0);
      s += w[static_cast<Eigen::Index>(i)] * r * r;
    }
    return s;
  }

  // Jacobian rows scaled by sqrt(w), and the matching residual vector.
  void linearize(double phi_m, double d0, Eigen::MatrixXd& J, Eigen::VectorXd& r) const {
    const auto m = static_cast<Eigen::Index>(terms.size());
    J.resize(m, 2);
    r.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& t = terms[static_cast<std::size_t>(i)];
      const double sw = std::sqrt(w[i]);
      const double d = d0 * t.g;
      J(i, 0) = sw * t.lorentz * absorption_factor(d);
      J(i, 1) = sw * phi_m * t.lorentz * absorption_factor_slope(d) * t.g;
      r[i] = sw * (y[i] - model(static_cast<std::size_t>(i), phi_m, d0));
    }
  }

  // Best phi_m for fixed d0 (the model is linear in phi_m).
  double best_phi_m(double d0) const {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      const double b = terms[i].lorentz * absorption_factor(d0 * terms[i].g);
      num += w[k] * b * y[k];
      den += w[k] * b * b;
    }
    return den > 0.0 ? num / den : 0.0;
  }
};

}  // namespace

LinearFit fit_linear_slope(std::span<const LinearPoint> points, double n_cutoff) {
  std::vector<LinearPoint> used;
  for (const auto& p : points) {
    if (!std::isfinite(p.n) || !std::isfinite(p.phase)) throw FitError("non-finite point in linear fit", NAN);
    if (p.n <= n_cutoff) used.push_back(p);
  }
  if (used.size() < 3) {
    throw FitError(fmt::format("linear fit needs at least 3 points with n <= {} (got {})", n_cutoff, used.size()),
                   NAN);
  }
  const bool weighted = all_weighted(used);
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : used) {
    const double w = weighted ? 1.0 / (p.sem * p.sem) : 1.0;
    sxx += w * p.n * p.n;
    sxy += w * p.n * p.phase;
  }
  if (!(sxx > 0.0)) throw FitError("degenerate design: all points at n = 0", NAN);

  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.points_used = used.size();
  fit.dof = used.size() - 1;
  for (const auto& p : used) {
    const double w = weighted ? 1.0 / (p.sem * p.sem) : 1.0;
    const double r = p.phase - fit.slope * p.n;
    fit.chi2 += w * r * r;
  }
  const double scale = fit.chi2 / static_cast<double>(fit.dof);
  fit.slope_error = std::sqrt(scale / sxx);
  return fit;
}

DetuningFit fit_detuning_curve(std::span<const DetuningPoint> points, double gamma,
                               const DetuningFitOptions& options) {
  if (!(gamma > 0.0)) throw DomainError("gamma must be > 0");
  if (points.size() < 5) throw FitError(fmt::format("detuning fit needs at least 5 points (got {})", points.size()), NAN);
  const bool has_neg = std::any_of(points.begin(), points.end(), [](const auto& p) { return p.delta_s < 0.0; });
  const bool has_pos = std::any_of(points.begin(), points.end(), [](const auto& p) { return p.delta_s > 0.0; });
  if (!has_neg || !has_pos) throw FitError("detuning points must span both signs of the detuning", NAN);

  Problem pb;
  const auto m = static_cast<Eigen::Index>(points.size());
  pb.y.resize(m);
  pb.w.resize(m);
  const bool weighted = all_weighted(points);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& p = points[static_cast<std::size_t>(i)];
    if (!std::isfinite(p.delta_s) || !std::isfinite(p.phase)) throw FitError("non-finite point in detuning fit", NAN);
    pb.terms.push_back(curve_terms(p.delta_s, gamma));
    pb.y[i] = p.phase;
    pb.w[i] = weighted ? 1.0 / (p.sem * p.sem) : 1.0;
  }

  // Coarse start: profile the cost over d0 with the optimal phi_m at each.
  double best_d0 = 1.0, best_cost = std::numeric_limits<double>::infinity();
  for (double d0 = 0.05; d0 <= 50.0; d0 *= 1.15) {
    const double c = pb.cost(pb.best_phi_m(d0), d0);
    if (c < best_cost) {
      best_cost = c;
      best_d0 = d0;
    }
  }

  double phi_m = pb.best_phi_m(best_d0);
  double d0 = best_d0;
  double cost = pb.cost(phi_m, d0);
  double lambda = 1e-3;
  bool converged = false;
  int it = 0;
  Eigen::MatrixXd J;
  Eigen::VectorXd r;
  for (; it < options.max_iterations && !converged; ++it) {
    pb.linearize(phi_m, d0, J, r);
    const Eigen::Matrix2d JtJ = J.transpose() * J;
    const Eigen::Vector2d g = J.transpose() * r;
    bool stepped = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::Matrix2d A = JtJ;
      A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-300);
      const Eigen::Vector2d step = A.ldlt().solve(g);
      double nd0 = d0 + step[1];
      if (!(nd0 > 0.0)) nd0 = 0.5 * d0;
      const double nphi = phi_m + step[0];
      const double ncost = pb.cost(nphi, nd0);
      if (std::isfinite(ncost) && ncost <= cost) {
        const double rel = std::abs(step[0]) / std::max(std::abs(phi_m), 1e-300) +
                           std::abs(nd0 - d0) / d0;
        converged = rel < options.tolerance || cost - ncost <= options.tolerance * std::max(cost, 1e-300);
        phi_m = nphi;
        d0 = nd0;
        cost = ncost;
        lambda = std::max(lambda / 10.0, 1e-15);
        stepped = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) {
      // No descent direction left: the current point is the minimum to
      // working precision.
      converged = true;
    }
  }
  if (!converged) {
    throw FitError(fmt::format("detuning fit did not converge in {} iterations", options.max_iterations), cost);
  }

  pb.linearize(phi_m, d0, J, r);
  const Eigen::Matrix2d JtJ = J.transpose() * J;
  const double det = JtJ.determinant();
  if (!(det > 1e-14 * JtJ(0, 0) * JtJ(1, 1)) || !std::isfinite(det)) {
    throw FitError("singular normal matrix at the detuning-fit optimum", cost);
  }
  DetuningFit fit;
  fit.params = {phi_m, d0};
  fit.residual = cost;
  fit.dof = points.size() - 2;
  fit.iterations = it;
  const double scale = cost / static_cast<double>(fit.dof);
  const Eigen::Matrix2d cov = scale * JtJ.inverse();
  fit.phi_m_error = std::sqrt(cov(0, 0));
  fit.d0_error = std::sqrt(cov(1, 1));
  fit.covariance = cov(0, 1);
  return fit;
}

double student_t_quantile(double confidence, std::size_t dof) {
  if (!(confidence > 0.0 && confidence < 1.0) || dof == 0) throw DomainError("invalid t-quantile arguments");
  const boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.5 + 0.5 * confidence);
}

}  // namespace xps
