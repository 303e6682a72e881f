// Plug-in posterior prediction at the query point, plus the scoring rules
// used by the benchmarks (squared error, Gaussian CRPS).
//
//   mean(x*) = mu + c*^T Sigma^-1 (y - 1 mu - gamma)
//   var(x*)  = c(x*, x*) - c*^T Sigma^-1 c*
//
// The variance is the latent-function variance: the nugget is excluded by
// default and can be added back for observed-response intervals. Solves
// against Sigma reuse the estimator's eigendecomposition cache.

#pragma once

#include <cmath>
#include <numbers>

#include "rlgp/estimator.hpp"

namespace rlgp {

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
  Vector query;
  bool variance_clamped = false;  // true when the raw variance went negative
};

inline Prediction predict(const FittedLocalModel& model, bool include_nugget = false) {
  const Neighborhood& nb = model.neighborhood;
  const Vector cross = kernel_cross(nb.cross_sq_dist, model.params.theta0, model.params.vartheta);
  const Vector resid = nb.yn.array() - model.mu - model.gamma.gamma.array();

  Prediction pred;
  pred.query = nb.query;
  pred.mean = model.mu + cross.dot(model.cov.sigma_solve(resid));
  double variance = model.params.theta0 - cross.dot(model.cov.sigma_solve(cross));
  if (include_nugget) variance += model.params.nu;
  if (variance < 0.0) {
    variance = 0.0;
    pred.variance_clamped = true;
  }
  pred.variance = variance;
  if (!std::isfinite(pred.mean) || !std::isfinite(pred.variance))
    throw NumericalError("predict: non-finite posterior");
  return pred;
}

// Closed-form CRPS of a Gaussian forecast N(mean, variance) against y_true:
//   sigma * [ z (2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi) ],  z = (y - mean)/sigma.
// A zero-variance forecast degenerates to the absolute error.
inline double crps_gaussian(double mean, double variance, double y_true) {
  if (variance < 0.0) throw std::invalid_argument("crps_gaussian: negative variance");
  const double sigma = std::sqrt(variance);
  if (sigma == 0.0) return std::abs(y_true - mean);
  const double z = (y_true - mean) / sigma;
  const double cdf = 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return sigma * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - 1.0 / std::sqrt(std::numbers::pi));
}

inline double mse(const Vector& predictions, const Vector& truths) {
  if (predictions.size() != truths.size() || predictions.size() == 0)
    throw std::invalid_argument("mse: length mismatch");
  return (predictions - truths).squaredNorm() / static_cast<double>(predictions.size());
}

}  // namespace rlgp
