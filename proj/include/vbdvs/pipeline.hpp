#pragma once

// Data preparation and direct h-step out-of-sample forecasting: transform
// codes, outlier cleaning, standardization, principal components, direct
// dataset alignment, the expanding-window protocol, and MSFE/ALPL evaluation
// against an AR benchmark. Indices are 0-based.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "vbdvs/common.hpp"
#include "vbdvs/estimator.hpp"

namespace vbdvs {

// Transform codes: 1 level, 2 diff, 3 double diff, 4 log, 5 diff of log,
// 6 double diff of log, 7 diff of percent change.
inline int transform_loss(int code) {
  switch (code) {
    case 1:
    case 4:
      return 0;
    case 2:
    case 5:
      return 1;
    case 3:
    case 6:
    case 7:
      return 2;
    default:
      throw std::invalid_argument("transform code must lie in 1..7");
  }
}

inline VectorXd apply_transform(const VectorXd& series, int code) {
  const int loss = transform_loss(code);
  const Eigen::Index n = series.size();
  if (n <= loss) throw std::invalid_argument("apply_transform: series too short for code " +
                                             std::to_string(code));
  if (!series.allFinite()) throw std::invalid_argument("apply_transform: non-finite entries");

  const auto diff = [](const VectorXd& v) {
    return VectorXd(v.tail(v.size() - 1) - v.head(v.size() - 1));
  };
  const auto logged = [&](const VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (!(v(i) > 0.0))
        throw std::invalid_argument("apply_transform: nonpositive value at index " +
                                    std::to_string(i) + " under code " + std::to_string(code));
    return VectorXd(v.array().log());
  };

  switch (code) {
    case 1:
      return series;
    case 2:
      return diff(series);
    case 3:
      return diff(diff(series));
    case 4:
      return logged(series);
    case 5:
      return diff(logged(series));
    case 6:
      return diff(diff(logged(series)));
    case 7: {
      VectorXd pct(n - 1);
      for (Eigen::Index i = 1; i < n; ++i) {
        if (series(i - 1) == 0.0)
          throw std::invalid_argument("apply_transform: zero value at index " +
                                      std::to_string(i - 1) + " under code 7");
        pct(i - 1) = series(i) / series(i - 1) - 1.0;
      }
      return diff(pct);
    }
    default:
      throw std::invalid_argument("transform code must lie in 1..7");  // unreachable
  }
}

namespace detail {

// Quantile with linear interpolation at q*(n-1) over a sorted copy.
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

inline double median_of(const std::vector<double>& v) { return quantile(v, 0.5); }

}  // namespace detail

// One-shot outlier rule: an observation is an outlier when its distance from
// the median exceeds kappa interquartile ranges; it is replaced by the median
// of up to five preceding observations. The rule statistics and the
// replacement medians both come from the original series; an outlier with no
// predecessors is left unchanged, and a zero IQR suspends the rule.
inline VectorXd remove_outliers(const VectorXd& series, double kappa = 4.5) {
  const Eigen::Index n = series.size();
  if (n < 6) throw std::invalid_argument("remove_outliers: need at least 6 observations");
  if (!(kappa > 0.0)) throw std::invalid_argument("remove_outliers: kappa must be positive");
  if (!series.allFinite()) throw std::invalid_argument("remove_outliers: non-finite entries");

  std::vector<double> vals(series.data(), series.data() + n);
  const double med = detail::median_of(vals);
  const double iqr = detail::quantile(vals, 0.75) - detail::quantile(vals, 0.25);
  if (iqr == 0.0) return series;

  VectorXd out = series;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(series(i) - med) / iqr <= kappa) continue;
    const Eigen::Index take = std::min<Eigen::Index>(i, 5);
    if (take == 0) continue;
    std::vector<double> window(series.data() + (i - take), series.data() + i);
    out(i) = detail::median_of(window);
  }
  return out;
}

struct Standardized {
  MatrixXd X;
  RowVectorXd mean;
  RowVectorXd std;  // sample standard deviation, divisor n-1
};

inline Standardized standardize(const MatrixXd& X) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (n < 2 || p < 1) throw std::invalid_argument("standardize: need at least 2 rows");
  Standardized out;
  out.mean = X.colwise().mean();
  out.std.resize(p);
  out.X.resize(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double sd =
        std::sqrt((X.col(j).array() - out.mean(j)).square().sum() / static_cast<double>(n - 1));
    if (!(sd > 0.0))
      throw std::invalid_argument("standardize: zero-variance column " + std::to_string(j));
    out.std(j) = sd;
    out.X.col(j) = (X.col(j).array() - out.mean(j)) / sd;
  }
  return out;
}

// First k principal-component factors of an already-standardized matrix:
// left singular vectors scaled by singular values over sqrt(T-1), so each
// factor's squared norm equals the matching eigenvalue of the sample
// covariance. Sign convention: the largest-magnitude loading of each
// component is positive.
inline MatrixXd principal_components(const MatrixXd& X, int k) {
  const Eigen::Index T = X.rows(), p = X.cols();
  if (k < 1 || k > std::min(T, p))
    throw std::invalid_argument("principal_components: k out of range");
  Eigen::BDCSVD<MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  MatrixXd F = svd.matrixU().leftCols(k) * svd.singularValues().head(k).asDiagonal() /
               std::sqrt(static_cast<double>(T - 1));
  for (int i = 0; i < k; ++i) {
    Eigen::Index imax;
    svd.matrixV().col(i).cwiseAbs().maxCoeff(&imax);
    if (svd.matrixV()(imax, i) < 0.0) F.col(i) = -F.col(i);
  }
  return F;
}

// Annualized h-period log growth: y_i = (400/h) ln(P_{i+h} / P_i), length n-h.
inline VectorXd build_target(const VectorXd& price, int h) {
  const Eigen::Index n = price.size();
  if (h < 1) throw std::invalid_argument("build_target: h must be positive");
  if (n <= h) throw std::invalid_argument("build_target: series too short for horizon");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(price(i) > 0.0))
      throw std::invalid_argument("build_target: nonpositive price at index " + std::to_string(i));
  VectorXd y(n - h);
  const double scale = 400.0 / static_cast<double>(h);
  for (Eigen::Index i = 0; i + h < n; ++i) y(i) = scale * std::log(price(i + h) / price(i));
  return y;
}

struct ForecastTask {
  int horizon = 1;
  int lags = 2;          // own lags of the target in the direct regression
  double window = 0.5;   // expanding-window start fraction
  bool target_transform = true;  // build the (400/h) log-growth target
};

inline void check_task(const ForecastTask& task) {
  if (task.horizon < 1) throw std::invalid_argument("forecast task: horizon must be positive");
  if (task.lags < 0) throw std::invalid_argument("forecast task: lags must be nonnegative");
  if (!(task.window > 0.0) || !(task.window < 1.0))
    throw std::invalid_argument("forecast task: window fraction must lie in (0,1)");
}

// Direct-forecast design rows: origin s carries target y_{s+h} against
// (1, y_s, ..., y_{s-lags+1}, x_s).
struct AlignedDataset {
  RegressionData data;
  std::vector<int> origins;  // 0-based origin index of each row
  int horizon = 1;
};

inline AlignedDataset build_direct_dataset(const VectorXd& y, const MatrixXd& X,
                                           const ForecastTask& task) {
  check_task(task);
  const Eigen::Index T = y.size();
  const Eigen::Index px = X.cols();
  if (px > 0 && X.rows() != T)
    throw std::invalid_argument("build_direct_dataset: predictor rows do not match target");
  const int h = task.horizon, lags = task.lags;
  const Eigen::Index first = std::max(lags - 1, 0), last = T - 1 - h;
  if (last < first)
    throw std::invalid_argument("build_direct_dataset: series too short for h and lags");

  const Eigen::Index rows = last - first + 1;  // T - h - (lags - 1) when lags >= 1
  AlignedDataset out;
  out.horizon = h;
  out.data.y.resize(rows);
  out.data.X.resize(rows, 1 + lags + px);
  out.origins.reserve(static_cast<std::size_t>(rows));
  for (Eigen::Index s = first; s <= last; ++s) {
    const Eigen::Index r = s - first;
    out.data.y(r) = y(s + h);
    out.data.X(r, 0) = 1.0;
    for (int l = 0; l < lags; ++l) out.data.X(r, 1 + l) = y(s - l);
    if (px > 0) out.data.X.row(r).tail(px) = X.row(s);
    out.origins.push_back(static_cast<int>(s));
  }
  return out;
}

struct ForecastRecord {
  int origin = -1;
  double point = 0.0;
  double variance = 0.0;
  double realized = std::numeric_limits<double>::quiet_NaN();
  double log_pred_lik = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::string error;
};

inline void attach_realized(ForecastRecord& rec, double realized) {
  rec.realized = realized;
  rec.log_pred_lik = log_normal_density(realized, rec.point, rec.variance);
}

// Predictive density from a fitted model at a new predictor row: mean from
// the terminal coefficient state, variance from its covariance plus the
// terminal measurement variance.
inline ForecastRecord forecast_vbdvs(const FitResult& fit, const RowVectorXd& x_origin) {
  const Eigen::Index T = fit.states.m_smooth.rows();
  if (T == 0) throw std::invalid_argument("forecast_vbdvs: empty fit");
  if (x_origin.size() != fit.states.m_smooth.cols())
    throw std::invalid_argument("forecast_vbdvs: predictor row has wrong length");
  ForecastRecord rec;
  rec.point = x_origin.dot(fit.states.m_smooth.row(T - 1));
  rec.variance = x_origin.dot(fit.states.P_smooth[static_cast<std::size_t>(T - 1)] *
                              x_origin.transpose()) +
                 fit.vol.sigma2(T - 1);
  if (!(rec.variance > 0.0) || !std::isfinite(rec.variance))
    throw numerical_error("forecast_vbdvs: nonpositive predictive variance");
  return rec;
}

// Least-squares direct forecast with a Gaussian plug-in density; residual
// variance divisor is rows minus columns and is floored to keep the density
// finite on degenerate exact fits.
inline ForecastRecord ols_direct_forecast(const RegressionData& train,
                                          const RowVectorXd& x_origin) {
  check_regression_data(train);
  const Eigen::Index n = train.rows(), k = train.cols();
  if (x_origin.size() != k)
    throw std::invalid_argument("ols_direct_forecast: predictor row has wrong length");
  if (n <= k) throw std::invalid_argument("ols_direct_forecast: need more rows than columns");
  Eigen::ColPivHouseholderQR<MatrixXd> qr(train.X);
  if (qr.rank() < k) throw numerical_error("ols_direct_forecast: rank-deficient design");
  const VectorXd beta = qr.solve(train.y);
  const double rss = (train.y - train.X * beta).squaredNorm();
  const double s2 = std::max(rss / static_cast<double>(n - k), 1e-12);
  ForecastRecord rec;
  rec.point = x_origin.dot(beta);
  rec.variance = s2;
  return rec;
}

struct EvalSummary {
  double msfe = 0.0;
  double alpl = 0.0;
  double rel_msfe = 1.0;  // model/benchmark ratio
  double rel_alpl = 0.0;  // model - benchmark spread
};

// Point and density accuracy against the benchmark on shared origins. Pairs
// where either side failed are skipped.
inline EvalSummary evaluate_oos(const std::vector<ForecastRecord>& model,
                                const std::vector<ForecastRecord>& benchmark) {
  if (model.size() != benchmark.size())
    throw std::invalid_argument("evaluate_oos: record lists differ in length");
  double se_m = 0.0, se_b = 0.0, lp_m = 0.0, lp_b = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (model[i].origin != benchmark[i].origin)
      throw std::invalid_argument("evaluate_oos: misaligned origins at position " +
                                  std::to_string(i));
    if (model[i].failed || benchmark[i].failed) continue;
    if (std::isnan(model[i].realized) || std::isnan(benchmark[i].realized))
      throw std::invalid_argument("evaluate_oos: record without realized value");
    se_m += (model[i].point - model[i].realized) * (model[i].point - model[i].realized);
    se_b += (benchmark[i].point - benchmark[i].realized) *
            (benchmark[i].point - benchmark[i].realized);
    lp_m += model[i].log_pred_lik;
    lp_b += benchmark[i].log_pred_lik;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("evaluate_oos: no usable record pairs");
  EvalSummary out;
  out.msfe = se_m / n;
  out.alpl = lp_m / n;
  out.rel_msfe = (se_m / n) / (se_b / n);
  out.rel_alpl = (lp_m - lp_b) / n;
  return out;
}

enum class ModelKind { ar, vbdvs };

// Forecasting model specification. n_factors: -1 uses all predictors
// directly, 0 uses none (own lags only), k > 0 uses the first k principal
// components. h0 overrides the slab prior rate; when NaN the conventional
// size-based defaults apply (1 for 5 factors, 12 for 60, 100 for the
// all-predictor design).
struct ModelSpec {
  ModelKind kind = ModelKind::vbdvs;
  int n_factors = -1;
  double h0 = std::numeric_limits<double>::quiet_NaN();
};

inline PriorConfig resolve_prior(const ModelSpec& spec, PriorConfig prior) {
  if (spec.kind != ModelKind::vbdvs) return prior;
  if (!std::isnan(spec.h0)) {
    prior.h0 = spec.h0;
  } else if (spec.n_factors == 5) {
    prior.h0 = 1.0;
  } else if (spec.n_factors == 60) {
    prior.h0 = 12.0;
  } else if (spec.n_factors == -1) {
    prior.h0 = 100.0;
  }
  return prior;
}

// Expanding-window direct forecasting: origins run from the window-fraction
// mark through T-1-h, refitting on all information available at each origin.
// Factor models re-standardize and re-extract components on every training
// window. A failed origin is recorded as such and skipped by evaluate_oos.
inline std::vector<ForecastRecord> run_expanding_window(
    const VectorXd& target, const MatrixXd& predictors, const ForecastTask& task,
    const ModelSpec& spec, const PriorConfig& prior, const FitOptions& fit_opts = {},
    int threads = 1) {
  check_task(task);
  check_options(fit_opts);
  const Eigen::Index N = target.size();
  const Eigen::Index px = predictors.cols();
  if (px > 0 && predictors.rows() != N)
    throw std::invalid_argument("run_expanding_window: predictor rows do not match target");
  if (!target.allFinite() || (px > 0 && !predictors.allFinite()))
    throw std::invalid_argument("run_expanding_window: non-finite inputs");
  const bool needs_predictors = spec.kind == ModelKind::vbdvs && spec.n_factors != 0;
  if (needs_predictors && px == 0)
    throw std::invalid_argument("run_expanding_window: model requires predictors");
  if (spec.kind == ModelKind::vbdvs && spec.n_factors > 0 && spec.n_factors > px)
    throw std::invalid_argument("run_expanding_window: more factors than predictors");

  const int h = task.horizon;
  const Eigen::Index first = static_cast<Eigen::Index>(std::floor(task.window * N)) - 1;
  const Eigen::Index last = N - 1 - h;
  // Guarantees at least five training rows at the first origin.
  const Eigen::Index min_first = std::max(task.lags - 1, 0) + h + 4;
  if (first < min_first || last < first)
    throw std::invalid_argument("run_expanding_window: panel too short for the initial window");

  const PriorConfig prior_eff = resolve_prior(spec, prior);
  const Eigen::Index n_origins = last - first + 1;
  std::vector<ForecastRecord> records(static_cast<std::size_t>(n_origins));

  const auto run_origin = [&](Eigen::Index idx) {
    const Eigen::Index s = first + idx;
    ForecastRecord rec;
    rec.origin = static_cast<int>(s);
    try {
      // Exogenous block over rows 0..s (everything known at the origin).
      MatrixXd exo;  // (s+1) x q
      if (spec.kind == ModelKind::vbdvs && spec.n_factors != 0 && px > 0) {
        const Standardized std_block = standardize(predictors.topRows(s + 1));
        exo = spec.n_factors > 0 ? principal_components(std_block.X, spec.n_factors)
                                 : std_block.X;
      }

      // Training rows end at origin s-h (the last with a realized target);
      // the forecast row is built at origin s itself.
      const auto aligned = build_direct_dataset(target.head(s + 1), exo, task);
      const RegressionData& train = aligned.data;
      RowVectorXd x_origin(train.cols());
      x_origin(0) = 1.0;
      for (int l = 0; l < task.lags; ++l) x_origin(1 + l) = target(s - l);
      if (exo.cols() > 0) x_origin.tail(exo.cols()) = exo.row(s);

      if (spec.kind == ModelKind::ar) {
        rec = ols_direct_forecast(train, x_origin);
      } else {
        const FitResult fit = fit_vbdvs(train, prior_eff, fit_opts);
        rec = forecast_vbdvs(fit, x_origin);
      }
      rec.origin = static_cast<int>(s);
      attach_realized(rec, target(s + h));
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
    records[static_cast<std::size_t>(idx)] = std::move(rec);
  };

  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(n_origins)));
  if (n_threads == 1) {
    for (Eigen::Index i = 0; i < n_origins; ++i) run_origin(i);
  } else {
    std::atomic<Eigen::Index> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i)
      pool.emplace_back([&] {
        for (Eigen::Index idx = next.fetch_add(1); idx < n_origins; idx = next.fetch_add(1))
          run_origin(idx);
      });
    for (auto& th : pool) th.join();
  }
  return records;
}

}  // namespace vbdvs
