#pragma once

// Synthetic sparse TVP-regression generator and the Monte Carlo harness
// around it. The benchmark design: four active predictors whose AR(1)
// coefficient paths switch on and off by an indicator schedule, log-AR(1)
// stochastic volatility, all remaining predictors pure noise.
//
// Draw order from one seeded stream (part of the reproducibility contract):
//   1. x_{t,j} row-major (t outer, j inner), standard normal
//   2. coefficient-path innovations, t = 1..T outer, j inner
//   3. log-variance innovations, t = 1..T
//   4. measurement noise, t = 1..T

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "vbdvs/common.hpp"
#include "vbdvs/estimator.hpp"

namespace vbdvs {

struct DgpConfig {
  VectorXd theta_bar;        // long-run coefficient levels
  double rho = 0.99;         // AR coefficient of the theta paths
  double state_scale = 0.1;  // innovation sd of theta (T^{-1/2} by default)
  double sv_mean = 0.1;      // long-run log variance
  double sv_rho = 0.99;
  double sv_scale = 0.1;
  Eigen::MatrixXi schedule;  // T x p activation indicators
  std::uint64_t seed = 0;
};

struct DgpDraw {
  VectorXd y;
  MatrixXd x;
  MatrixXd beta_true;   // schedule * theta, exactly zero off-schedule
  VectorXd sigma2_true;
};

// Activation schedule of the benchmark design (0-based rows; the stated
// ranges are 1-based with round-half-to-even brackets):
//   predictor 1 active for t = 1 .. round(T/3)-1
//   predictor 2 always active
//   predictor 3 active for t = 1 .. round(T/2)-1
//   predictor 4 active on the complementary second half
//   predictors 5..p never active
inline Eigen::MatrixXi default_schedule(int T, int p) {
  if (T < 3) throw std::invalid_argument("default_schedule: need T >= 3");
  if (p < 4) throw std::invalid_argument("default_schedule: need p >= 4");
  const long long r3 = round_half_even(static_cast<double>(T) / 3.0);
  const long long r2 = round_half_even(static_cast<double>(T) / 2.0);
  Eigen::MatrixXi s = Eigen::MatrixXi::Zero(T, p);
  for (int t = 0; t < T; ++t) {
    const long long t1 = t + 1;  // 1-based time index
    s(t, 0) = t1 <= r3 - 1 ? 1 : 0;
    s(t, 1) = 1;
    s(t, 2) = t1 <= r2 - 1 ? 1 : 0;
    s(t, 3) = t1 >= r2 ? 1 : 0;
  }
  return s;
}

inline DgpConfig default_config(int T, int p, std::uint64_t seed) {
  if (p < 4) throw std::invalid_argument("default_config: need p >= 4");
  DgpConfig cfg;
  cfg.theta_bar = VectorXd::Zero(p);
  cfg.theta_bar(0) = -1.7;
  cfg.theta_bar(1) = 2.9;
  cfg.theta_bar(2) = 1.4;
  cfg.theta_bar(3) = -2.3;
  cfg.rho = 0.99;
  cfg.sv_rho = 0.99;
  cfg.sv_mean = 0.1;
  cfg.state_scale = 1.0 / std::sqrt(static_cast<double>(T));
  cfg.sv_scale = cfg.state_scale;
  cfg.schedule = default_schedule(T, p);
  cfg.seed = seed;
  return cfg;
}

inline void check_dgp_config(const DgpConfig& cfg) {
  const Eigen::Index T = cfg.schedule.rows(), p = cfg.schedule.cols();
  if (T < 1 || p < 1) throw std::invalid_argument("dgp config: empty schedule");
  if (cfg.theta_bar.size() != p)
    throw std::invalid_argument("dgp config: theta_bar length does not match schedule");
  if (std::abs(cfg.rho) > 1.0 || std::abs(cfg.sv_rho) > 1.0)
    throw std::invalid_argument("dgp config: AR coefficients must lie in [-1,1]");
  if (!(cfg.state_scale >= 0.0) || !(cfg.sv_scale >= 0.0))
    throw std::invalid_argument("dgp config: scales must be nonnegative");
  if (((cfg.schedule.array() != 0) && (cfg.schedule.array() != 1)).any())
    throw std::invalid_argument("dgp config: schedule entries must be 0 or 1");
}

inline DgpDraw simulate_dgp(const DgpConfig& cfg) {
  check_dgp_config(cfg);
  const Eigen::Index T = cfg.schedule.rows(), p = cfg.schedule.cols();
  Rng rng(cfg.seed);

  DgpDraw draw;
  draw.x.resize(T, p);
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index j = 0; j < p; ++j) draw.x(t, j) = rng.normal();

  // theta_{j,t} = theta_bar_j + rho (theta_{j,t-1} - theta_bar_j) + scale eta,
  // started at the long-run level.
  draw.beta_true = MatrixXd::Zero(T, p);
  VectorXd theta = cfg.theta_bar;
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index j = 0; j < p; ++j) {
      theta(j) = cfg.theta_bar(j) + cfg.rho * (theta(j) - cfg.theta_bar(j)) +
                 cfg.state_scale * rng.normal();
      if (cfg.schedule(t, j) == 1) draw.beta_true(t, j) = theta(j);
    }
  }

  // Same AR(1) for the log variance, started at its long-run level.
  draw.sigma2_true.resize(T);
  double logvar = cfg.sv_mean;
  for (Eigen::Index t = 0; t < T; ++t) {
    logvar = cfg.sv_mean + cfg.sv_rho * (logvar - cfg.sv_mean) + cfg.sv_scale * rng.normal();
    draw.sigma2_true(t) = std::exp(logvar);
  }

  draw.y.resize(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    double signal = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) signal += draw.beta_true(t, j) * draw.x(t, j);
    draw.y(t) = signal + std::sqrt(draw.sigma2_true(t)) * rng.normal();
  }
  return draw;
}

// Per-replication mean squared deviation between coefficient paths.
inline double msd(const MatrixXd& beta_true, const MatrixXd& beta_est) {
  if (beta_true.rows() != beta_est.rows() || beta_true.cols() != beta_est.cols())
    throw std::invalid_argument("msd: shape mismatch");
  if (beta_true.size() == 0) throw std::invalid_argument("msd: empty input");
  return (beta_true - beta_est).squaredNorm() / static_cast<double>(beta_true.size());
}

struct ReplicationRecord {
  int rep = 0;
  std::uint64_t seed = 0;
  double msd = 0.0;
  double wall_ms = 0.0;
  bool converged = false;
  int iterations = 0;
  bool failed = false;
  std::string error;
};

struct MonteCarloSummary {
  std::vector<ReplicationRecord> records;
  double mean_msd = 0.0;    // mean over successful replications
  double median_msd = 0.0;
  double sum_msd = 0.0;     // comparable to summed-over-replications tables
  double mean_wall_ms = 0.0;
  int n_failed = 0;
};

// Called once per successful replication; invocations are serialized but the
// order across replications is unspecified when threads > 1.
using ReplicationObserver = std::function<void(int rep, const DgpDraw&, const FitResult&)>;

// Independent benchmark-design replications: replication r draws from stream
// derive_seed(seed, r), fits, and records the coefficient-path MSD. Failed
// fits are recorded and excluded from the aggregates.
inline MonteCarloSummary run_monte_carlo(int T, int p, int replications, const PriorConfig& prior,
                                         std::uint64_t seed, const FitOptions& opts = {},
                                         int threads = 1,
                                         const ReplicationObserver& observer = nullptr) {
  if (replications < 1) throw std::invalid_argument("run_monte_carlo: need replications >= 1");
  check_options(opts);

  MonteCarloSummary summary;
  summary.records.resize(static_cast<std::size_t>(replications));
  std::mutex observer_mutex;

  const auto run_one = [&](int rep) {
    ReplicationRecord rec;
    rec.rep = rep;
    rec.seed = derive_seed(seed, static_cast<std::uint64_t>(rep));
    try {
      const DgpDraw draw = simulate_dgp(default_config(T, p, rec.seed));
      RegressionData data{draw.y, draw.x};
      const auto start = std::chrono::steady_clock::now();
      const FitResult fit = fit_vbdvs(data, prior, opts);
      const auto stop = std::chrono::steady_clock::now();
      rec.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
      rec.msd = msd(draw.beta_true, fit.states.m_smooth);
      rec.converged = fit.converged;
      rec.iterations = fit.iterations_run;
      if (observer) {
        std::lock_guard<std::mutex> lock(observer_mutex);
        observer(rep, draw, fit);
      }
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
    summary.records[static_cast<std::size_t>(rep)] = std::move(rec);
  };

  const int n_threads = std::max(1, std::min(threads, replications));
  if (n_threads == 1) {
    for (int rep = 0; rep < replications; ++rep) run_one(rep);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i)
      pool.emplace_back([&] {
        for (int rep = next.fetch_add(1); rep < replications; rep = next.fetch_add(1)) run_one(rep);
      });
    for (auto& th : pool) th.join();
  }

  // Aggregate in replication order so results do not depend on scheduling.
  std::vector<double> msds;
  for (const auto& rec : summary.records) {
    if (rec.failed) {
      ++summary.n_failed;
      continue;
    }
    msds.push_back(rec.msd);
    summary.sum_msd += rec.msd;
    summary.mean_wall_ms += rec.wall_ms;
  }
  if (!msds.empty()) {
    summary.mean_msd = summary.sum_msd / static_cast<double>(msds.size());
    summary.mean_wall_ms /= static_cast<double>(msds.size());
    std::sort(msds.begin(), msds.end());
    const std::size_t n = msds.size();
    summary.median_msd = (n % 2 == 1) ? msds[n / 2] : 0.5 * (msds[n / 2 - 1] + msds[n / 2]);
  }
  return summary;
}

}  // namespace vbdvs
