#pragma once

// Diagonal-transition linear-Gaussian state space for time-varying regression
// coefficients:
//
//   y_t    = x_t' beta_t + e_t,            e_t  ~ N(0, sigma2_t)
//   beta_t = F_t beta_{t-1} + eta_t,       eta_t ~ N(0, diag(w_tilde_t))
//
// with F_t = diag(f_tilde_t). The per-element (f_tilde, w_tilde) pair comes
// from combining a random-walk innovation prior (precision w_inv) with a
// shrinkage pseudo-prior (precision v_inv); see combine_priors. Time indices
// are 0-based throughout.

#include <string>
#include <vector>

#include "vbdvs/common.hpp"

namespace vbdvs {

// Per-period system matrices, stored row t = time t. sigma2 is the
// measurement variance path; combine_priors leaves it empty for the caller.
struct SystemSequences {
  MatrixXd f_tilde;  // T x p transition diagonals
  MatrixXd w_tilde;  // T x p state innovation variances
  VectorXd sigma2;   // T measurement variances
};

// Filtered / predicted / smoothed moments plus the initial condition they
// were produced under. P sequences hold one p x p covariance per period.
struct StateMoments {
  MatrixXd m_pred;    // m_{t|t-1}
  MatrixXd m_filt;    // m_{t|t}
  MatrixXd m_smooth;  // m_{t|T}
  std::vector<MatrixXd> P_pred;
  std::vector<MatrixXd> P_filt;
  std::vector<MatrixXd> P_smooth;
  MatrixXd gain;  // Kalman gain rows K_t
  VectorXd m0;
  MatrixXd P0;
};

// Posterior second-moment summaries consumed by the variational updates.
struct ErrorSummaries {
  MatrixXd d_diag;  // T x p diagonal of E[(beta_t - F_t beta_{t-1})(...)']
  VectorXd r;       // T measurement squared-error summaries
};

// Harmonic combination of the state innovation prior and the shrinkage
// pseudo-prior: w~ = 1/(w_inv + v_inv), f~ = w~ * w_inv, so f~ in (0,1] and
// 1/w~ = 1/w + 1/v exactly up to rounding. v_inv == 0 is the unrestricted
// limit and maps to f~ = 1, w~ = 1/w_inv exactly.
inline SystemSequences combine_priors(const MatrixXd& w_inv, const MatrixXd& v_inv) {
  if (w_inv.rows() != v_inv.rows() || w_inv.cols() != v_inv.cols())
    throw std::invalid_argument("combine_priors: w_inv and v_inv shapes differ");
  if (w_inv.size() == 0) throw std::invalid_argument("combine_priors: empty input");

  SystemSequences sys;
  sys.f_tilde.resize(w_inv.rows(), w_inv.cols());
  sys.w_tilde.resize(w_inv.rows(), w_inv.cols());
  for (Eigen::Index t = 0; t < w_inv.rows(); ++t) {
    for (Eigen::Index j = 0; j < w_inv.cols(); ++j) {
      const double wi = w_inv(t, j);
      const double vi = v_inv(t, j);
      if (!(wi > 0.0) || !std::isfinite(wi))
        throw std::invalid_argument("combine_priors: w_inv must be positive and finite at (" +
                                    std::to_string(t) + "," + std::to_string(j) + ")");
      if (vi < 0.0 || !std::isfinite(vi))
        throw std::invalid_argument("combine_priors: v_inv must be nonnegative and finite at (" +
                                    std::to_string(t) + "," + std::to_string(j) + ")");
      if (vi == 0.0) {
        sys.w_tilde(t, j) = 1.0 / wi;
        sys.f_tilde(t, j) = 1.0;
      } else {
        const double wt = 1.0 / (wi + vi);
        sys.w_tilde(t, j) = wt;
        sys.f_tilde(t, j) = wt * wi;
      }
    }
  }
  return sys;
}

namespace detail {

inline void check_system(const RegressionData& data, const SystemSequences& sys,
                         const VectorXd& m0, const MatrixXd& P0) {
  check_regression_data(data);
  const Eigen::Index T = data.rows(), p = data.cols();
  if (sys.f_tilde.rows() != T || sys.f_tilde.cols() != p ||
      sys.w_tilde.rows() != T || sys.w_tilde.cols() != p)
    throw std::invalid_argument("kalman_filter: system sequences do not match data shape");
  if (sys.sigma2.size() != T)
    throw std::invalid_argument("kalman_filter: sigma2 path has wrong length");
  if (!sys.f_tilde.allFinite() || !sys.w_tilde.allFinite())
    throw std::invalid_argument("kalman_filter: non-finite system sequences");
  if ((sys.w_tilde.array() <= 0.0).any())
    throw std::invalid_argument("kalman_filter: state innovation variances must be positive");
  if (!(sys.sigma2.array() > 0.0).all() || !sys.sigma2.allFinite())
    throw std::invalid_argument("kalman_filter: measurement variances must be positive");
  if (m0.size() != p || P0.rows() != p || P0.cols() != p)
    throw std::invalid_argument("kalman_filter: initial moments do not match p");
}

// Cholesky of a predictive covariance with one jittered retry. Throws
// numerical_error naming the time index on failure.
inline Eigen::LLT<MatrixXd> spd_factor(const MatrixXd& P, Eigen::Index t) {
  Eigen::LLT<MatrixXd> llt(P);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-8 * P.diagonal().mean();
  MatrixXd Pj = P;
  Pj.diagonal().array() += jitter;
  llt.compute(Pj);
  if (llt.info() == Eigen::Success) return llt;
  throw numerical_error("rts_smoother: predictive covariance at t=" + std::to_string(t) +
                        " is not SPD after jitter");
}

}  // namespace detail

// Forward pass. Fills predicted and filtered moments and the gain; smoothed
// slots are left empty for rts_smoother.
inline StateMoments kalman_filter(const RegressionData& data, const SystemSequences& sys,
                                  const VectorXd& m0, const MatrixXd& P0) {
  detail::check_system(data, sys, m0, P0);
  const Eigen::Index T = data.rows(), p = data.cols();

  StateMoments mom;
  mom.m_pred.resize(T, p);
  mom.m_filt.resize(T, p);
  mom.gain.resize(T, p);
  mom.P_pred.resize(static_cast<std::size_t>(T));
  mom.P_filt.resize(static_cast<std::size_t>(T));
  mom.m0 = m0;
  mom.P0 = P0;

  VectorXd m_prev = m0;
  MatrixXd P_prev = P0;
  VectorXd Px(p);
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto f = sys.f_tilde.row(t).transpose();
    const auto x = data.X.row(t);

    // Predict: diagonal transition scales rows and columns of P.
    VectorXd m_pred = f.cwiseProduct(m_prev);
    MatrixXd P_pred = f.asDiagonal() * P_prev * f.asDiagonal();
    P_pred.diagonal() += sys.w_tilde.row(t).transpose();
    P_pred = 0.5 * (P_pred + P_pred.transpose()).eval();

    // Update.
    Px.noalias() = P_pred * x.transpose();
    const double s = x.dot(Px) + sys.sigma2(t);
    if (!(s > 0.0) || !std::isfinite(s))
      throw numerical_error("kalman_filter: nonpositive innovation variance at t=" +
                            std::to_string(t));
    const VectorXd K = Px / s;
    const double resid = data.y(t) - x.dot(m_pred);
    VectorXd m_filt = m_pred + K * resid;
    MatrixXd P_filt = P_pred - K * Px.transpose();
    P_filt = 0.5 * (P_filt + P_filt.transpose()).eval();

    mom.m_pred.row(t) = m_pred.transpose();
    mom.m_filt.row(t) = m_filt.transpose();
    mom.gain.row(t) = K.transpose();
    mom.P_pred[static_cast<std::size_t>(t)] = std::move(P_pred);
    mom.P_filt[static_cast<std::size_t>(t)] = std::move(P_filt);
    m_prev = std::move(m_filt);
    P_prev = mom.P_filt[static_cast<std::size_t>(t)];
  }
  return mom;
}

// Backward Rauch-Tung-Striebel pass over the filtered moments. The gain at
// step t uses the transition into t+1, C_t = P_{t|t} F_{t+1} P_{t+1|t}^{-1}.
inline StateMoments rts_smoother(StateMoments mom, const SystemSequences& sys) {
  const Eigen::Index T = mom.m_filt.rows(), p = mom.m_filt.cols();
  if (T == 0) throw std::invalid_argument("rts_smoother: empty filter output");
  if (sys.f_tilde.rows() != T || sys.f_tilde.cols() != p)
    throw std::invalid_argument("rts_smoother: system sequences do not match moments");

  mom.m_smooth.resize(T, p);
  mom.P_smooth.resize(static_cast<std::size_t>(T));
  mom.m_smooth.row(T - 1) = mom.m_filt.row(T - 1);
  mom.P_smooth[static_cast<std::size_t>(T - 1)] = mom.P_filt[static_cast<std::size_t>(T - 1)];

  for (Eigen::Index t = T - 2; t >= 0; --t) {
    const std::size_t u = static_cast<std::size_t>(t);
    const auto f_next = sys.f_tilde.row(t + 1).transpose();
    const auto llt = detail::spd_factor(mom.P_pred[u + 1], t + 1);
    // C = P_filt F_{t+1} P_pred^{-1}; computed transposed via one solve.
    const MatrixXd C = llt.solve(f_next.asDiagonal() * mom.P_filt[u]).transpose();

    mom.m_smooth.row(t) =
        mom.m_filt.row(t) + (C * (mom.m_smooth.row(t + 1) - mom.m_pred.row(t + 1)).transpose()).transpose();
    MatrixXd P = mom.P_filt[u] + C * (mom.P_smooth[u + 1] - mom.P_pred[u + 1]) * C.transpose();
    mom.P_smooth[u] = 0.5 * (P + P.transpose());
  }
  return mom;
}

// Diagonal of the posterior expectation of the squared state innovation,
//   D_t = P_{t|T} + m_{t|T} m_{t|T}' + (P_{t-1|T} + m_{t-1|T} m_{t-1|T}')(I - 2 F_t)',
// evaluated elementwise; the t = 0 backward term uses the prior moments.
// Only the diagonal is returned (the variational updates need nothing else).
inline MatrixXd state_sq_error(const StateMoments& mom, const SystemSequences& sys) {
  const Eigen::Index T = mom.m_smooth.rows(), p = mom.m_smooth.cols();
  if (T == 0) throw std::invalid_argument("state_sq_error: smoother output missing");
  MatrixXd d(T, p);
  for (Eigen::Index t = 0; t < T; ++t) {
    const std::size_t u = static_cast<std::size_t>(t);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double cur = mom.P_smooth[u](j, j) + mom.m_smooth(t, j) * mom.m_smooth(t, j);
      const double prev = (t == 0)
                              ? mom.P0(j, j) + mom.m0(j) * mom.m0(j)
                              : mom.P_smooth[u - 1](j, j) + mom.m_smooth(t - 1, j) * mom.m_smooth(t - 1, j);
      d(t, j) = cur + prev * (1.0 - 2.0 * sys.f_tilde(t, j));
    }
  }
  return d;
}

// Posterior expected squared measurement error,
//   r_t = (y_t - x_t' m_{t|T})^2 + x_t' P_{t|T} x_t.
inline VectorXd measurement_sq_error(const RegressionData& data, const StateMoments& mom) {
  const Eigen::Index T = data.rows();
  if (mom.m_smooth.rows() != T)
    throw std::invalid_argument("measurement_sq_error: smoother output does not match data");
  VectorXd r(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto x = data.X.row(t);
    const double resid = data.y(t) - x.dot(mom.m_smooth.row(t));
    r(t) = resid * resid + x.dot(mom.P_smooth[static_cast<std::size_t>(t)] * x.transpose());
  }
  return r;
}

}  // namespace vbdvs
