#pragma once

// Outer variational fixed-point loop for the TVP regression with dynamic
// spike-and-slab selection and discounted stochastic volatility. Each
// iteration r:
//
//   1. combine_priors from (w_inv, v) of iteration r-1
//   2. Kalman filter under the r-1 volatility path
//   3. RTS smoother
//   4. squared-error summaries D_t, R_t
//   5. per-(j,t) selection updates: tau^-2, gamma, v, w^-1, then pi0 per t
//      (gamma consumes the r-1 pi0; pi0 consumes fresh gammas)
//   6. precision filter + smoother -> volatility path for iteration r+1
//
// Convergence surrogate: max absolute change in smoothed coefficient means.
// Non-convergence within max_iter is reported, not an error.

#include <optional>
#include <string>

#include "vbdvs/common.hpp"
#include "vbdvs/dvs_prior.hpp"
#include "vbdvs/statespace.hpp"
#include "vbdvs/volatility.hpp"

namespace vbdvs {

// Prior settings. m0 empty means a zero vector of matching length; P0 is
// p0_scale * I. The named presets are the three standard calibrations:
// prior1 loose slab / tight innovations, prior2 loose slab / loose
// innovations, prior3 informative slab / tight innovations.
struct PriorConfig {
  VectorXd m0;
  double p0_scale = 4.0;
  double a0 = 0.01;
  double b0 = 0.01;
  double c0 = 100.0;
  double d0 = 1.0;
  double g0 = 1.0;
  double h0 = 12.0;
  double c_spike = 1e-4;
  double delta = 0.8;

  DvsHyper hyper() const { return DvsHyper{c_spike, g0, h0, c0, d0}; }

  static PriorConfig prior1() {
    PriorConfig p;
    p.g0 = 0.01;
    p.h0 = 0.01;
    p.c0 = 100.0;
    p.d0 = 1.0;
    return p;
  }
  static PriorConfig prior2() {
    PriorConfig p;
    p.g0 = 0.01;
    p.h0 = 0.01;
    p.c0 = 1.0;
    p.d0 = 1.0;
    return p;
  }
  static PriorConfig prior3() {
    PriorConfig p;
    p.g0 = 1.0;
    p.h0 = 12.0;
    p.c0 = 100.0;
    p.d0 = 1.0;
    return p;
  }
};

inline void check_prior(const PriorConfig& prior, Eigen::Index p) {
  check_hyper(prior.hyper());
  if (!(prior.p0_scale > 0.0)) throw std::invalid_argument("prior: p0_scale must be positive");
  if (!(prior.a0 > 0.0) || !(prior.b0 > 0.0))
    throw std::invalid_argument("prior: a0 and b0 must be positive");
  if (!(prior.delta > 0.0) || !(prior.delta <= 1.0))
    throw std::invalid_argument("prior: delta must lie in (0,1]");
  if (prior.m0.size() != 0 && prior.m0.size() != p)
    throw std::invalid_argument("prior: m0 length does not match predictor count");
}

struct FitOptions {
  int max_iter = 100;
  double tol = 1e-4;
  std::optional<double> fixed_sigma2;  // constant measurement variance mode
  bool dvs_enabled = true;             // spike-and-slab block on/off
};

inline void check_options(const FitOptions& opts) {
  if (opts.max_iter < 1) throw std::invalid_argument("fit options: max_iter must be >= 1");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("fit options: tol must be positive");
  if (opts.fixed_sigma2 && !(*opts.fixed_sigma2 > 0.0))
    throw std::invalid_argument("fit options: fixed_sigma2 must be positive");
}

// Posterior objects of the converged (or truncated) fixed point. When the
// selection block is disabled, tau2_inv/pip/v/pi0 keep their initialization;
// with fixed_sigma2 set, vol holds the constant path and empty shape/rate.
struct FitResult {
  StateMoments states;
  DvsState dvs;
  PrecisionPath vol;
  int iterations_run = 0;
  double final_delta = std::numeric_limits<double>::infinity();
  bool converged = false;
};

struct InitialState {
  MatrixXd w_inv;   // prior mean c0/d0 everywhere
  MatrixXd v;       // spike-leaning start 10 c_spike
  VectorXd sigma2;  // sample variance of y
  VectorXd pi0;     // 1/2
};

inline InitialState initialize_state(const RegressionData& data, const PriorConfig& prior) {
  check_regression_data(data);
  check_prior(prior, data.cols());
  const Eigen::Index T = data.rows(), p = data.cols();
  InitialState init;
  init.w_inv = MatrixXd::Constant(T, p, prior.c0 / prior.d0);
  // Spike-leaning start: coefficients begin tightly shrunk and only the data can
  // promote them into the slab.  A diffuse start is not recoverable: every
  // coefficient absorbs a wandering path in the first pass, the slab indicator
  // then self-perpetuates, and null predictors never deselect.
  init.v = MatrixXd::Constant(T, p, 10.0 * prior.c_spike);
  const double mean = data.y.mean();
  const double var = (data.y.array() - mean).square().sum() / static_cast<double>(T - 1);
  if (!(var > 0.0))
    throw std::invalid_argument("initialize_state: y has zero sample variance");
  init.sigma2 = VectorXd::Constant(T, var);
  init.pi0 = VectorXd::Constant(T, 0.5);
  return init;
}

namespace detail {

inline FitResult fit_core(const RegressionData& data, const PriorConfig& prior,
                          const FitOptions& opts) {
  check_regression_data(data);
  check_options(opts);
  const Eigen::Index T = data.rows(), p = data.cols();
  if (T < 2) throw std::invalid_argument("fit: need at least two observations");
  check_prior(prior, p);
  const DvsHyper hyper = prior.hyper();

  const VectorXd m0 = prior.m0.size() ? prior.m0 : VectorXd::Zero(p);
  const MatrixXd P0 = prior.p0_scale * MatrixXd::Identity(p, p);

  // Initialization; the y-variance start for sigma2 only matters when the
  // volatility block is live.
  FitResult res;
  res.dvs.w_inv = MatrixXd::Constant(T, p, prior.c0 / prior.d0);
  res.dvs.v = MatrixXd::Constant(T, p, 10.0 * prior.c_spike);  // spike-leaning, see initialize_state
  res.dvs.pi0 = VectorXd::Constant(T, 0.5);
  res.dvs.tau2_inv = MatrixXd::Constant(T, p, prior.g0 / prior.h0);
  res.dvs.pip = MatrixXd::Constant(T, p, 0.5);
  VectorXd sigma2_path;
  if (opts.fixed_sigma2) {
    sigma2_path = VectorXd::Constant(T, *opts.fixed_sigma2);
  } else {
    const double mean = data.y.mean();
    const double var = (data.y.array() - mean).square().sum() / static_cast<double>(T - 1);
    if (!(var > 0.0)) throw std::invalid_argument("fit: y has zero sample variance");
    sigma2_path = VectorXd::Constant(T, var);
  }

  const MatrixXd zero_v_inv = MatrixXd::Zero(T, p);
  MatrixXd m_prev;
  int iter = 0;
  const char* stage = "init";
  try {
    for (iter = 1; iter <= opts.max_iter; ++iter) {
      stage = "combine_priors";
      SystemSequences sys = opts.dvs_enabled ? combine_priors(res.dvs.w_inv, res.dvs.v.cwiseInverse())
                                             : combine_priors(res.dvs.w_inv, zero_v_inv);
      sys.sigma2 = sigma2_path;

      stage = "kalman_filter";
      StateMoments mom = kalman_filter(data, sys, m0, P0);
      stage = "rts_smoother";
      mom = rts_smoother(std::move(mom), sys);

      stage = "error_summaries";
      const MatrixXd D = state_sq_error(mom, sys);
      const VectorXd R = measurement_sq_error(data, mom);

      stage = "dvs_update";
      if (opts.dvs_enabled) {
        for (Eigen::Index t = 0; t < T; ++t) {
          const double pi0_prev = res.dvs.pi0(t);
          for (Eigen::Index j = 0; j < p; ++j) {
            const double m = mom.m_smooth(t, j);
            const double tau2_inv = update_tau2_inv(m, hyper);
            const double tau2 = 1.0 / tau2_inv;
            const double gamma = update_gamma(m, tau2, pi0_prev, hyper.c_spike);
            res.dvs.tau2_inv(t, j) = tau2_inv;
            res.dvs.pip(t, j) = gamma;
            res.dvs.v(t, j) = update_v(gamma, tau2, hyper.c_spike);
            res.dvs.w_inv(t, j) = update_w_inv(D(t, j), hyper);
          }
          res.dvs.pi0(t) = update_pi0(res.dvs.pip.row(t));
        }
      } else {
        for (Eigen::Index t = 0; t < T; ++t)
          for (Eigen::Index j = 0; j < p; ++j)
            res.dvs.w_inv(t, j) = update_w_inv(D(t, j), hyper);
      }

      stage = "volatility";
      if (!opts.fixed_sigma2) {
        res.vol = filter_precision(R, prior.a0, prior.b0, prior.delta);
        res.vol.phi_smooth = smooth_precision(res.vol.phi_filt, prior.delta);
        res.vol.sigma2 = precision_to_variance(res.vol.phi_smooth);
        sigma2_path = res.vol.sigma2;  // feeds the next Kalman pass
      }

      stage = "convergence";
      if (m_prev.size())
        res.final_delta = (mom.m_smooth - m_prev).cwiseAbs().maxCoeff();
      m_prev = mom.m_smooth;
      res.states = std::move(mom);
      res.iterations_run = iter;
      if (res.final_delta <= opts.tol) {
        res.converged = true;
        break;
      }
    }
  } catch (const numerical_error& e) {
    throw numerical_error("fit aborted at iteration " + std::to_string(iter) + ", stage " +
                          stage + ": " + e.what());
  }

  if (opts.fixed_sigma2) {
    res.vol.delta = prior.delta;
    res.vol.a0 = prior.a0;
    res.vol.b0 = prior.b0;
    res.vol.sigma2 = sigma2_path;
    res.vol.phi_filt = sigma2_path.cwiseInverse();
    res.vol.phi_smooth = res.vol.phi_filt;
  }
  return res;
}

}  // namespace detail

// Full estimator: dynamic selection plus discounted volatility by default;
// both blocks can be switched off through FitOptions.
inline FitResult fit_vbdvs(const RegressionData& data, const PriorConfig& prior,
                           const FitOptions& opts = {}) {
  return detail::fit_core(data, prior, opts);
}

// Constant-variance TVP regression without the selection block: Kalman
// filter + smoother plus the Gamma innovation-precision updates only.
inline FitResult fit_simple_tvp(const RegressionData& data, const PriorConfig& prior,
                                FitOptions opts) {
  if (!opts.fixed_sigma2)
    throw std::invalid_argument("fit_simple_tvp: fixed_sigma2 must be set");
  opts.dvs_enabled = false;
  return detail::fit_core(data, prior, opts);
}

}  // namespace vbdvs
