// Squared-exponential covariance machinery: pairwise squared distances,
// kernel matrices, and the eigendecomposition-backed matrix powers of
// S = Sigma^{1/2} that the robust loss and its gradients consume.
//
// A single symmetric eigendecomposition of Sigma services every power
// (S, S^-1, S^-3, S^-3/2) plus solves against Sigma itself, so the cost per
// parameter setting is one factorization regardless of how many powers are
// touched afterwards.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "rlgp/errors.hpp"

namespace rlgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Symmetric, zero-diagonal matrix of squared Euclidean distances.
struct DistanceMatrix {
  Matrix d;

  int n() const { return static_cast<int>(d.rows()); }
};

struct KernelParams {
  double nu = 1.0;       // noise variance, > 0
  double theta0 = 1.0;   // signal variance, > 0
  double vartheta = 1.0; // concentration, >= 0; larger means faster decay

  bool valid() const {
    return std::isfinite(nu) && std::isfinite(theta0) && std::isfinite(vartheta) &&
           nu > 0.0 && theta0 > 0.0 && vartheta >= 0.0;
  }
};

// d_{i,j} = (x_i - x_j)^T (x_i - x_j), rows of X as points.
inline DistanceMatrix pairwise_sq_dist(const Matrix& x) {
  const auto n = x.rows();
  if (n < 1 || x.cols() < 1) throw std::invalid_argument("pairwise_sq_dist: empty input");
  if (!x.allFinite()) throw std::invalid_argument("pairwise_sq_dist: non-finite input");
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (x.row(i) - x.row(j)).squaredNorm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return DistanceMatrix{std::move(d)};
}

// C = theta0 * exp(-vartheta * D), exp applied componentwise.
inline Matrix kernel_matrix(const DistanceMatrix& dist, double theta0, double vartheta) {
  if (!(theta0 > 0.0) || !(vartheta >= 0.0))
    throw std::invalid_argument("kernel_matrix: require theta0 > 0 and vartheta >= 0");
  return theta0 * (-vartheta * dist.d.array()).exp().matrix();
}

// Cross-covariance vector against a query: entries theta0 * exp(-vartheta * d_i)
// where d_i is the squared distance from local point i to the query.
inline Vector kernel_cross(const Vector& cross_sq_dist, double theta0, double vartheta) {
  return theta0 * (-vartheta * cross_sq_dist.array()).exp().matrix();
}

// Eigendecomposition of Sigma = nu*I + theta0*E(vartheta) together with the
// cached powers of S = Sigma^{1/2}. Immutable after construction.
struct CovarianceState {
  KernelParams params;
  Matrix sigma;
  Vector eigvals;      // eigenvalues of Sigma, ascending, floored at eps_eig
  Vector eigvals_raw;  // as returned by the solver, before the floor
  Matrix eigvecs;      // orthonormal columns
  Matrix s_half;       // S      = Sigma^{1/2}
  Matrix s_inv;        // S^-1   = Sigma^{-1/2}
  Matrix s_inv3;       // S^-3   = Sigma^{-3/2}
  Matrix s_inv3half;   // S^-3/2 = Sigma^{-3/4}
  double lambda_min_s = 0.0; // sqrt of the smallest floored eigenvalue
  double trace_s = 0.0;

  int n() const { return static_cast<int>(sigma.rows()); }

  // Sigma^{-1} b through the shared eigendecomposition.
  Vector sigma_solve(const Vector& b) const {
    return eigvecs * (eigvecs.transpose() * b).cwiseQuotient(eigvals);
  }
};

namespace detail {

// Relative floor guarding S^-3 against blow-up when Sigma is near singular.
inline constexpr double kEigFloorRel = 1e-12;

inline Vector floor_eigvals(const Vector& raw) {
  const double floor = kEigFloorRel * raw.maxCoeff();
  return raw.cwiseMax(floor);
}

// Eigendecomposition of Sigma(params, D) without forming any powers; the
// cheap path used by line searches that only need loss values.
struct SigmaEig {
  Vector eigvals;      // floored
  Vector eigvals_raw;
  Matrix eigvecs;
};

inline SigmaEig eig_sigma(const KernelParams& params, const DistanceMatrix& dist,
                          Matrix* sigma_out = nullptr) {
  Matrix sigma = kernel_matrix(dist, params.theta0, params.vartheta);
  sigma.diagonal().array() += params.nu;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sigma);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed for n=" + std::to_string(sigma.rows()) +
                         " covariance (nu=" + std::to_string(params.nu) +
                         ", theta0=" + std::to_string(params.theta0) +
                         ", vartheta=" + std::to_string(params.vartheta) + ")");
  if (sigma_out) *sigma_out = std::move(sigma);
  SigmaEig eig;
  eig.eigvals_raw = solver.eigenvalues();
  if (!(eig.eigvals_raw.maxCoeff() > 0.0))
    throw NumericalError("covariance has no positive eigenvalue; Sigma is not SPD");
  eig.eigvals = floor_eigvals(eig.eigvals_raw);
  eig.eigvecs = solver.eigenvectors();
  return eig;
}

inline Matrix power_from_eig(const Matrix& v, const Vector& lam, double exponent) {
  return v * lam.array().pow(exponent).matrix().asDiagonal() * v.transpose();
}

}  // namespace detail

inline CovarianceState build_covariance_state(const KernelParams& params,
                                              const DistanceMatrix& dist) {
  if (!params.valid()) throw std::invalid_argument("build_covariance_state: invalid parameters");
  CovarianceState state;
  state.params = params;
  detail::SigmaEig eig = detail::eig_sigma(params, dist, &state.sigma);
  state.eigvals = std::move(eig.eigvals);
  state.eigvals_raw = std::move(eig.eigvals_raw);
  state.eigvecs = std::move(eig.eigvecs);
  state.s_half = detail::power_from_eig(state.eigvecs, state.eigvals, 0.5);
  state.s_inv = detail::power_from_eig(state.eigvecs, state.eigvals, -0.5);
  state.s_inv3 = detail::power_from_eig(state.eigvecs, state.eigvals, -1.5);
  state.s_inv3half = detail::power_from_eig(state.eigvecs, state.eigvals, -0.75);
  state.lambda_min_s = std::sqrt(state.eigvals.minCoeff());
  state.trace_s = state.eigvals.array().sqrt().sum();
  return state;
}

}  // namespace rlgp
