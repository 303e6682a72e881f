// Robust local GP estimation under the perspective-transformed loss
//
//   l(mu, gamma, S) = 1/2 (y - 1 mu - gamma)^T S^-1 (y - 1 mu - gamma)
//                     + c0/2 Tr(S),    S = Sigma^{1/2},
//
// minimized subject to ||gamma||_0 <= q by block coordinate descent:
// an inner majorize-minimize loop of quantile thresholding for gamma,
// the closed-form weighted mean for mu, and a quasi-Newton pass over
// chi = (nu, theta0, vartheta) in log space. Every block is non-increasing
// in l, so the recorded loss trace is monotone.
//
// Gradient note: for a perturbation P of Sigma, the derivative of the loss
// through Sigma^{1/2} is exact only via the divided-difference kernel of
// x^{-1/2} in Sigma's eigenbasis. Directions that commute with Sigma (the
// nu and theta0 blocks) collapse to plain matrix-power expressions; the
// vartheta direction D .* E does not commute, so its gradient keeps the
// divided-difference form.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "rlgp/kernel.hpp"
#include "rlgp/neighborhood.hpp"

namespace rlgp {

// ---------------------------------------------------------------------------
// Robust scale helpers

inline double median(Vector values) {
  const auto n = values.size();
  if (n == 0) throw std::invalid_argument("median of empty vector");
  double* begin = values.data();
  double* end = begin + n;
  double* mid = begin + n / 2;
  std::nth_element(begin, mid, end);
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(begin, mid);
  return 0.5 * (lower + upper);
}

// 1.483 * Med(|y_i - Med(y)|), the consistency-scaled median absolute deviation.
inline double mad(const Vector& y) {
  const double med = median(y);
  return 1.483 * median((y.array() - med).abs().matrix());
}

// Floor applied to the noise variance so Sigma stays SPD when the optimizer
// pushes nu toward zero: 1e-8 * var(y), or 1e-12 absolute for constant data.
inline double nu_floor(const Vector& y) {
  const double mean = y.mean();
  const double var = (y.array() - mean).square().sum() / static_cast<double>(y.size());
  return var > 0.0 ? 1e-8 * var : 1e-12;
}

// ---------------------------------------------------------------------------
// Configuration and result types

enum class QMode { fixed, fraction, adaptive };
enum class C0Mode { one, corrected };

struct EstimatorConfig {
  QMode q_mode = QMode::adaptive;
  int q_fixed = 0;            // used when q_mode == fixed
  double q_fraction = 0.15;   // used when q_mode == fraction
  double tau = 3.0;           // MAD multiplier for the adaptive rule
  C0Mode c0_mode = C0Mode::one;
  int max_outer = 100;
  int max_inner_gamma = 100;
  double tol_outer = 1e-8;    // relative loss-decrease stop
  double tol_gamma = 1e-10;   // inf-norm stop for the inner gamma loop
  int qn_steps = 10;          // quasi-Newton iterations per outer pass
};

// Sparse mean-shift vector; entries off the support are exactly zero.
struct OutlyingnessVector {
  Vector gamma;
  std::vector<int> support;

  static OutlyingnessVector from(Vector g) {
    OutlyingnessVector out;
    out.support.reserve(static_cast<std::size_t>(g.size()));
    for (Eigen::Index i = 0; i < g.size(); ++i)
      if (g(i) != 0.0) out.support.push_back(static_cast<int>(i));
    out.gamma = std::move(g);
    return out;
  }
};

struct FitDiagnostics {
  bool converged = false;
  int outer_iterations = 0;
  int gamma_cap_hits = 0;  // inner loops that hit max_inner_gamma
};

struct FittedLocalModel {
  double mu = 0.0;
  OutlyingnessVector gamma;
  KernelParams params;
  int q_used = 0;
  double c0_used = 1.0;
  std::vector<double> loss_trace;    // entry 0 is the initial loss
  std::vector<int> support_trace;    // ||gamma||_0 at each recorded entry
  CovarianceState cov;
  Neighborhood neighborhood;
  FitDiagnostics diagnostics;
};

// ---------------------------------------------------------------------------
// Loss and gradients

inline double loss(double mu, const Vector& gamma, const CovarianceState& cov,
                   const Vector& y, double c0) {
  if (gamma.size() != y.size() || y.size() != cov.n())
    throw std::invalid_argument("loss: dimension mismatch");
  const Vector r = y.array() - mu - gamma.array();
  return 0.5 * r.dot(cov.s_inv * r) + 0.5 * c0 * cov.trace_s;
}

struct LossGradient {
  double mu = 0.0;
  Vector gamma;
  double nu = 0.0;
  double theta0 = 0.0;
  double vartheta = 0.0;
};

namespace detail {

// d l / d vartheta where dSigma/dvartheta = -theta0 * (D .* E). The
// divided-difference kernel of x^{-1/2} over Sigma's eigenvalues handles the
// non-commuting direction; the trace term only needs the diagonal.
inline double vartheta_gradient(const Matrix& eigvecs, const Vector& eigvals,
                                const Vector& r_tilde, const Matrix& d_times_e,
                                double theta0, double c0) {
  const auto n = eigvals.size();
  const Matrix b = eigvecs.transpose() * d_times_e * eigvecs;
  const Vector s = eigvals.cwiseSqrt();
  const Vector c = r_tilde.cwiseQuotient(s);
  double quad = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      quad += c(i) * c(j) / (s(i) + s(j)) * b(i, j);
  double trace = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) trace += b(i, i) / s(i);
  return -theta0 * (-0.5 * quad + 0.25 * c0 * trace);
}

}  // namespace detail

// The five gradients of l at (mu, gamma, nu, theta0, vartheta).
inline LossGradient grad_loss(double mu, const Vector& gamma, const CovarianceState& cov,
                              const Vector& y, double c0, const DistanceMatrix& dist) {
  if (gamma.size() != y.size() || y.size() != cov.n() || dist.n() != cov.n())
    throw std::invalid_argument("grad_loss: dimension mismatch");
  const Vector r = y.array() - mu - gamma.array();
  LossGradient g;
  g.gamma = -(cov.s_inv * r);
  g.mu = g.gamma.sum();

  const Matrix e = (-cov.params.vartheta * dist.d.array()).exp().matrix();
  const Vector w = cov.s_inv3half * r;
  g.nu = 0.25 * (c0 * cov.s_inv.trace() - r.dot(cov.s_inv3 * r));
  g.theta0 = 0.25 * (c0 * cov.s_inv.cwiseProduct(e).sum() - w.dot(e * w));

  const Matrix d_times_e = dist.d.cwiseProduct(e);
  const Vector r_tilde = cov.eigvecs.transpose() * r;
  g.vartheta = detail::vartheta_gradient(cov.eigvecs, cov.eigvals, r_tilde, d_times_e,
                                         cov.params.theta0, c0);
  return g;
}

// ---------------------------------------------------------------------------
// Block updates

// Closed-form minimizer over mu: 1^T S^-1 (y - gamma) / 1^T S^-1 1.
// The weight matrix is S^-1, not Sigma^-1.
inline double update_mu(const CovarianceState& cov, const Vector& y, const Vector& gamma) {
  const Vector weights = cov.s_inv * Vector::Ones(cov.n());
  const double denom = weights.sum();
  if (!(denom > 0.0))
    throw NumericalError("update_mu: 1^T S^-1 1 not positive (S not SPD?)");
  return weights.dot(y - gamma) / denom;
}

// Keeps the q largest-magnitude entries of s, zeroes the rest. Ties keep the
// earliest index. Exact solution of min ||t - s||_2 s.t. ||t||_0 <= q.
inline Vector quantile_threshold(const Vector& s, int q) {
  const auto p = s.size();
  if (q < 0 || q > p) throw std::invalid_argument("quantile_threshold: q out of [0, p]");
  if (q == static_cast<int>(p)) return s;
  Vector out = Vector::Zero(p);
  if (q == 0) return out;
  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  const auto larger = [&s](int a, int b) {
    const double ma = std::abs(s(a));
    const double mb = std::abs(s(b));
    return ma > mb || (ma == mb && a < b);
  };
  std::nth_element(order.begin(), order.begin() + (q - 1), order.end(), larger);
  for (int k = 0; k < q; ++k) out(order[static_cast<std::size_t>(k)]) = s(order[static_cast<std::size_t>(k)]);
  return out;
}

struct GammaResult {
  OutlyingnessVector value;
  int iterations = 0;
  bool converged = false;
};

// Majorize-minimize fixed-point iteration for the gamma block with S fixed:
//   gamma <- Theta#(gamma - (1/rho) S^-1 (gamma - (y - 1 mu)); q),
// rho = (1 + 1e-6) / lambda_min(S). The safety factor keeps rho a valid
// majorizer under eigenvalue round-off, so the loss never increases across
// inner iterations. Hitting the cap is reported, not fatal.
inline GammaResult update_gamma(const Vector& gamma_init, const CovarianceState& cov,
                                double mu, const Vector& y, int q,
                                int max_inner = 100, double tol = 1e-10) {
  GammaResult result;
  if (q == 0) {
    result.value = OutlyingnessVector::from(Vector::Zero(y.size()));
    result.converged = true;
    return result;
  }
  const double rho = (1.0 + 1e-6) / cov.lambda_min_s;
  const Vector pull = cov.s_inv * (y.array() - mu).matrix();
  Vector gamma = quantile_threshold(gamma_init, q);
  for (int j = 0; j < max_inner; ++j) {
    const Vector xi = gamma - (cov.s_inv * gamma - pull) / rho;
    Vector next = quantile_threshold(xi, q);
    const double change = (next - gamma).lpNorm<Eigen::Infinity>();
    gamma = std::move(next);
    ++result.iterations;
    if (change < tol) {
      result.converged = true;
      break;
    }
  }
  result.value = OutlyingnessVector::from(std::move(gamma));
  return result;
}

// Trimming level from the config: a fixed count, a fraction of n (rounded
// half-up), or Tukey's rule counting points outside Med(y) +/- tau * MAD(y).
// A zero MAD collapses the interval to the median, so every point off the
// median counts. All modes clamp to [0, floor(n/2)].
inline int resolve_q(const Vector& y, const EstimatorConfig& config) {
  const auto n = static_cast<int>(y.size());
  if (config.q_mode == QMode::adaptive && !(config.tau > 0.0))
    throw std::invalid_argument("resolve_q: tau must be positive");
  int q = 0;
  switch (config.q_mode) {
    case QMode::fixed:
      q = config.q_fixed;
      break;
    case QMode::fraction:
      q = static_cast<int>(std::floor(config.q_fraction * n + 0.5));
      break;
    case QMode::adaptive: {
      const double med = median(y);
      const double scale = mad(y);
      if (scale > 0.0) {
        const double lo = med - config.tau * scale;
        const double hi = med + config.tau * scale;
        for (Eigen::Index i = 0; i < y.size(); ++i)
          if (y(i) < lo || y(i) > hi) ++q;
      } else {
        for (Eigen::Index i = 0; i < y.size(); ++i)
          if (y(i) != med) ++q;
      }
      break;
    }
  }
  return std::clamp(q, 0, n / 2);
}

struct Initialization {
  double mu0 = 0.0;
  Vector gamma0;
  KernelParams params0;  // nu0 = MAD(y)^2 floored, theta0 = vartheta = 1
  Matrix s0;             // nu0 * I
};

inline Initialization initialize(const Vector& y) {
  if (y.size() < 1) throw std::invalid_argument("initialize: empty response vector");
  Initialization init;
  init.mu0 = median(y);
  const double spread = 1.483 * median((y.array() - init.mu0).abs().matrix());
  init.params0.nu = std::max(spread * spread, nu_floor(y));
  init.params0.theta0 = 1.0;
  init.params0.vartheta = 1.0;
  init.gamma0 = Vector::Zero(y.size());
  init.s0 = init.params0.nu * Matrix::Identity(y.size(), y.size());
  return init;
}

// ---------------------------------------------------------------------------
// chi block: quasi-Newton over (log nu, log theta0, log vartheta)

namespace detail {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

struct ChiProbe {
  KernelParams params;
  SigmaEig eig;
  Vector r_tilde;
  double loss = 0.0;
};

inline KernelParams chi_from_log(const Vector3& u, double floor_nu) {
  // u is clamped so exp() can neither overflow nor vanish entirely
  const auto bounded = [](double v) { return std::clamp(v, -300.0, 300.0); };
  KernelParams p;
  p.nu = std::max(std::exp(bounded(u(0))), floor_nu);
  p.theta0 = std::exp(bounded(u(1)));
  p.vartheta = std::exp(bounded(u(2)));
  return p;
}

inline ChiProbe chi_probe(const Vector3& u, double floor_nu, const DistanceMatrix& dist,
                          const Vector& r, double c0) {
  ChiProbe probe;
  probe.params = chi_from_log(u, floor_nu);
  probe.eig = eig_sigma(probe.params, dist);
  probe.r_tilde = probe.eig.eigvecs.transpose() * r;
  const auto& lam = probe.eig.eigvals;
  probe.loss = 0.5 * probe.r_tilde.cwiseQuotient(lam.cwiseSqrt()).dot(probe.r_tilde) +
               0.5 * c0 * lam.array().sqrt().sum();
  return probe;
}

// Gradient in log space at a probe point; chain rule multiplies each raw
// gradient by its parameter. At the nu floor the nu component is zero (the
// clamped objective is locally flat there).
inline Vector3 chi_gradient(const ChiProbe& probe, double floor_nu,
                            const DistanceMatrix& dist, double c0) {
  const auto& lam = probe.eig.eigvals;
  const auto& rt = probe.r_tilde;
  const double nu = probe.params.nu;
  const double theta0 = probe.params.theta0;

  const Vector inv_sqrt = lam.array().rsqrt();
  const double g_nu =
      0.25 * (c0 * inv_sqrt.sum() - rt.cwiseQuotient(lam.array().pow(1.5).matrix()).dot(rt));

  // E's spectrum in the shared eigenbasis is (lambda_raw - nu) / theta0
  const Vector e_spec = (probe.eig.eigvals_raw.array() - nu) / theta0;
  const Vector w2 = rt.array().square() / lam.array().pow(1.5);
  const double g_theta0 =
      0.25 * (c0 * inv_sqrt.cwiseProduct(e_spec).sum() - w2.dot(e_spec));

  const Matrix e = (-probe.params.vartheta * dist.d.array()).exp().matrix();
  const double g_vartheta = vartheta_gradient(probe.eig.eigvecs, lam, rt,
                                              dist.d.cwiseProduct(e), theta0, c0);

  Vector3 g;
  g(0) = probe.params.nu <= floor_nu ? 0.0 : nu * g_nu;
  g(1) = theta0 * g_theta0;
  g(2) = probe.params.vartheta * g_vartheta;
  return g;
}

}  // namespace detail

// BFGS with Armijo backtracking (factor 0.5, sufficient decrease 1e-4) on the
// log-parameterized chi block, capped at qn_steps iterations. The returned
// parameters never increase the loss; an exhausted line search keeps the
// current point.
inline KernelParams update_chi(double mu, const Vector& gamma, const KernelParams& params,
                               const DistanceMatrix& dist, const Vector& y, double c0,
                               int qn_steps) {
  using detail::Matrix3;
  using detail::Vector3;
  const double floor_nu = nu_floor(y);
  const Vector r = y.array() - mu - gamma.array();

  Vector3 u(std::log(std::max(params.nu, floor_nu)),
            std::log(std::max(params.theta0, 1e-300)),
            std::log(std::max(params.vartheta, 1e-300)));
  detail::ChiProbe probe = detail::chi_probe(u, floor_nu, dist, r, c0);
  Vector3 grad = detail::chi_gradient(probe, floor_nu, dist, c0);
  const double grad_tol = 1e-10 * std::max(1.0, std::abs(probe.loss));

  Matrix3 h_inv = Matrix3::Identity();
  bool moved = false;
  for (int step = 0; step < qn_steps; ++step) {
    if (grad.lpNorm<Eigen::Infinity>() < grad_tol) break;
    Vector3 direction = -(h_inv * grad);
    double slope = grad.dot(direction);
    if (!(slope < 0.0)) {  // not a descent direction; restart from steepest
      direction = -grad;
      slope = grad.dot(direction);
      h_inv = Matrix3::Identity();
    }
    double alpha = 1.0;
    bool accepted = false;
    detail::ChiProbe candidate;
    while (alpha >= 1e-14) {
      candidate = detail::chi_probe(u + alpha * direction, floor_nu, dist, r, c0);
      if (candidate.loss <= probe.loss + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;

    const Vector3 u_next = u + alpha * direction;
    const Vector3 grad_next = detail::chi_gradient(candidate, floor_nu, dist, c0);
    const Vector3 s = u_next - u;
    const Vector3 dg = grad_next - grad;
    const double sy = s.dot(dg);
    if (sy > 1e-12 * s.norm() * dg.norm()) {
      const Matrix3 outer = s * dg.transpose() / sy;
      h_inv = (Matrix3::Identity() - outer) * h_inv * (Matrix3::Identity() - outer.transpose()) +
              s * s.transpose() / sy;
    }
    u = u_next;
    probe = std::move(candidate);
    grad = grad_next;
    moved = true;
  }
  // an immediate stop (stationary point or exhausted first line search)
  // returns the caller's parameters bit-for-bit
  return moved ? probe.params : params;
}

// ---------------------------------------------------------------------------
// Full fit: Algorithm "initialize, then { gamma loop; mu; chi }" with the
// covariance state rebuilt from the current chi at the top of every pass.

inline FittedLocalModel fit(const Neighborhood& nb, const EstimatorConfig& config) {
  const int n = nb.size();
  if (n < 1) throw std::invalid_argument("fit: empty neighborhood");
  if (config.max_outer < 1 || config.max_inner_gamma < 1 || config.qn_steps < 1)
    throw std::invalid_argument("fit: iteration caps must be >= 1");

  FittedLocalModel model;
  model.neighborhood = nb;
  model.q_used = resolve_q(nb.yn, config);
  model.c0_used = config.c0_mode == C0Mode::corrected
                      ? static_cast<double>(n - model.q_used) / static_cast<double>(n)
                      : 1.0;

  const Initialization init = initialize(nb.yn);
  model.mu = init.mu0;
  model.params = init.params0;
  Vector gamma = init.gamma0;

  const auto rebuild = [&](int iteration) {
    try {
      return build_covariance_state(model.params, nb.dist);
    } catch (const NumericalError& err) {
      throw NumericalError("fit: covariance failure at outer iteration " +
                           std::to_string(iteration) + " (nu=" + std::to_string(model.params.nu) +
                           ", theta0=" + std::to_string(model.params.theta0) +
                           ", vartheta=" + std::to_string(model.params.vartheta) +
                           "): " + err.what());
    }
  };

  CovarianceState cov = rebuild(0);
  double current = loss(model.mu, gamma, cov, nb.yn, model.c0_used);
  model.loss_trace.push_back(current);
  model.support_trace.push_back(static_cast<int>((gamma.array() != 0.0).count()));

  for (int t = 0; t < config.max_outer; ++t) {
    GammaResult gres = update_gamma(gamma, cov, model.mu, nb.yn, model.q_used,
                                    config.max_inner_gamma, config.tol_gamma);
    if (!gres.converged) ++model.diagnostics.gamma_cap_hits;
    gamma = gres.value.gamma;
    model.mu = update_mu(cov, nb.yn, gamma);
    model.params = update_chi(model.mu, gamma, model.params, nb.dist, nb.yn, model.c0_used,
                              config.qn_steps);
    cov = rebuild(t + 1);

    const double next = loss(model.mu, gamma, cov, nb.yn, model.c0_used);
    model.loss_trace.push_back(next);
    model.support_trace.push_back(static_cast<int>((gamma.array() != 0.0).count()));
    model.diagnostics.outer_iterations = t + 1;
    if (current - next <= config.tol_outer * std::max(1.0, std::abs(current))) {
      model.diagnostics.converged = true;
      current = next;
      break;
    }
    current = next;
  }

  model.gamma = OutlyingnessVector::from(std::move(gamma));
  model.cov = std::move(cov);
  return model;
}

}  // namespace rlgp
