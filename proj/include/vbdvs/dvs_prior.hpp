#pragma once

// Closed-form variational updates for the dynamic spike-and-slab prior:
// slab scale tau^2, inclusion probability gamma (the PIP), conditional prior
// variance v, inclusion rate pi0, and the state innovation precision w^-1.
// All updates are scalar and elementwise in (j, t); the estimator sweeps them
// over the smoothed moments each outer iteration.

#include "vbdvs/common.hpp"

namespace vbdvs {

// Hyperparameters of the selection prior: Gamma(g0, h0) on 1/tau^2,
// Gamma(c0, d0) on 1/w, and the spike scale factor c_spike << 1.
struct DvsHyper {
  double c_spike = 1e-4;
  double g0 = 1.0;
  double h0 = 12.0;
  double c0 = 100.0;
  double d0 = 1.0;
};

inline void check_hyper(const DvsHyper& hyper) {
  if (!(hyper.c_spike > 0.0) || !(hyper.c_spike < 1.0))
    throw std::invalid_argument("dvs hyper: c_spike must lie in (0,1)");
  for (double x : {hyper.g0, hyper.h0, hyper.c0, hyper.d0})
    if (!(x > 0.0) || !std::isfinite(x))
      throw std::invalid_argument("dvs hyper: shape/rate parameters must be positive");
}

// Variational state swept each iteration, one entry per (t, j).
struct DvsState {
  MatrixXd tau2_inv;  // posterior mean of 1/tau^2_{j,t}
  MatrixXd pip;       // posterior inclusion probabilities gamma_{j,t}
  MatrixXd v;         // conditional prior variances v_{j,t}
  VectorXd pi0;       // inclusion rates pi0_t
  MatrixXd w_inv;     // posterior mean of 1/w_{j,t}
};

// Gamma posterior mean for the slab precision: (g0 + 1/2)/(h0 + m^2/2).
inline double update_tau2_inv(double m_smooth_jt, const DvsHyper& hyper) {
  return (hyper.g0 + 0.5) / (hyper.h0 + 0.5 * m_smooth_jt * m_smooth_jt);
}

// Posterior inclusion probability from the slab/spike density odds,
//   gamma = pi0 N(m | 0, tau2) / [pi0 N(m | 0, tau2) + (1-pi0) N(m | 0, c tau2)],
// evaluated in log space: the spike density underflows to zero already for
// |m|/sqrt(c tau2) of a few dozen, which is routine.
inline double update_gamma(double m_smooth_jt, double tau2, double pi0_prev, double c_spike) {
  if (!(tau2 > 0.0) || !std::isfinite(tau2))
    throw std::invalid_argument("update_gamma: tau2 must be positive");
  if (!(pi0_prev >= 0.0) || !(pi0_prev <= 1.0))
    throw std::invalid_argument("update_gamma: pi0_prev must lie in [0,1]");
  if (pi0_prev == 0.0) return 0.0;
  if (pi0_prev == 1.0) return 1.0;

  const double m2 = m_smooth_jt * m_smooth_jt;
  const double log_odds = std::log(pi0_prev) - std::log1p(-pi0_prev) + 0.5 * std::log(c_spike) +
                          0.5 * (m2 / tau2) * (1.0 / c_spike - 1.0);
  if (log_odds >= 0.0) return 1.0 / (1.0 + std::exp(-log_odds));
  const double e = std::exp(log_odds);
  return e / (1.0 + e);
}

// Conditional prior variance: v = (1-gamma)^2 c tau^2 + gamma tau^2,
// interpolating between spike and slab scales.
inline double update_v(double gamma, double tau2, double c_spike) {
  if (!(gamma >= 0.0) || !(gamma <= 1.0))
    throw std::invalid_argument("update_v: gamma must lie in [0,1]");
  const double om = 1.0 - gamma;
  return om * om * c_spike * tau2 + gamma * tau2;
}

// Beta(1,1)-posterior mean of the inclusion rate: (1 + sum gamma)/(2 + p).
inline double update_pi0(const RowVectorXd& pip_row) {
  const Eigen::Index p = pip_row.size();
  if (p == 0) throw std::invalid_argument("update_pi0: empty row");
  double s = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double g = pip_row(j);
    if (!(g >= 0.0) || !(g <= 1.0))
      throw std::invalid_argument("update_pi0: entries must lie in [0,1]");
    s += g;
  }
  return (1.0 + s) / (2.0 + static_cast<double>(p));
}

// Gamma posterior mean for the innovation precision: (c0 + 1/2)/(d0 + D/2).
// The squared-error diagonal can come out slightly negative in floating
// point; it is clamped at zero so the rate stays positive.
inline double update_w_inv(double d_jj, const DvsHyper& hyper) {
  const double d = d_jj > 0.0 ? d_jj : 0.0;
  return (hyper.c0 + 0.5) / (hyper.d0 + 0.5 * d);
}

}  // namespace vbdvs
