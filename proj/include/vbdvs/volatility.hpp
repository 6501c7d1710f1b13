#pragma once

// Variance-discounted stochastic volatility. The measurement precision
// 1/sigma2_t keeps a Gamma-conjugate form whose shape/rate are discounted by
// delta each period (a random-walk surrogate without an explicit law of
// motion), then a backward exponential smoother turns filtered precision
// means into a smoothed path.

#include "vbdvs/common.hpp"

namespace vbdvs {

// Gamma shape/rate paths and the precision/variance products derived from
// them. phi_filt_t = a_t/b_t by construction; phi_smooth_T = phi_filt_T.
struct PrecisionPath {
  VectorXd a;
  VectorXd b;
  VectorXd phi_filt;
  VectorXd phi_smooth;
  VectorXd sigma2;
  double delta = 0.8;
  double a0 = 0.01;
  double b0 = 0.01;
};

// Forward pass: a_t = delta a_{t-1} + 1/2, b_t = delta b_{t-1} + r_t/2.
// Discounting preserves the prior mean: delta a / delta b = a / b.
inline PrecisionPath filter_precision(const VectorXd& r, double a0, double b0, double delta) {
  if (!(delta > 0.0) || !(delta <= 1.0))
    throw std::invalid_argument("filter_precision: delta must lie in (0,1]");
  if (!(a0 > 0.0) || !(b0 > 0.0))
    throw std::invalid_argument("filter_precision: a0 and b0 must be positive");
  if (r.size() == 0) throw std::invalid_argument("filter_precision: empty input");
  if ((r.array() < 0.0).any() || !r.allFinite())
    throw std::invalid_argument("filter_precision: squared errors must be nonnegative and finite");

  PrecisionPath path;
  path.delta = delta;
  path.a0 = a0;
  path.b0 = b0;
  const Eigen::Index T = r.size();
  path.a.resize(T);
  path.b.resize(T);
  path.phi_filt.resize(T);
  double a_prev = a0, b_prev = b0;
  for (Eigen::Index t = 0; t < T; ++t) {
    const double a = delta * a_prev + 0.5;
    const double b = delta * b_prev + 0.5 * r(t);
    path.a(t) = a;
    path.b(t) = b;
    path.phi_filt(t) = a / b;
    a_prev = a;
    b_prev = b;
  }
  return path;
}

// Backward pass: phi~_T = phi^_T, phi~_t = (1-delta) phi^_t + delta phi~_{t+1}.
// Each smoothed value is a convex combination, so the path stays inside the
// range of the filtered means.
inline VectorXd smooth_precision(const VectorXd& phi_filt, double delta) {
  if (!(delta > 0.0) || !(delta <= 1.0))
    throw std::invalid_argument("smooth_precision: delta must lie in (0,1]");
  if (phi_filt.size() == 0) throw std::invalid_argument("smooth_precision: empty input");
  if (!(phi_filt.array() > 0.0).all())
    throw std::invalid_argument("smooth_precision: filtered precisions must be positive");

  const Eigen::Index T = phi_filt.size();
  VectorXd phi(T);
  phi(T - 1) = phi_filt(T - 1);
  for (Eigen::Index t = T - 2; t >= 0; --t)
    phi(t) = (1.0 - delta) * phi_filt(t) + delta * phi(t + 1);
  return phi;
}

inline VectorXd precision_to_variance(const VectorXd& phi) {
  for (Eigen::Index t = 0; t < phi.size(); ++t)
    if (!(phi(t) > 0.0) || !std::isfinite(phi(t)))
      throw numerical_error("precision_to_variance: nonpositive precision at t=" + std::to_string(t));
  return phi.cwiseInverse();
}

}  // namespace vbdvs
