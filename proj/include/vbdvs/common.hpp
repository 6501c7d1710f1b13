#pragma once

// Shared types, error taxonomy, and deterministic random draws used across the
// library. Everything numeric is double precision, Eigen dense.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace vbdvs {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

// Raised when a numeric pass breaks down (non-SPD covariance after jitter,
// rank-deficient solve, nonpositive variance). Distinct from invalid inputs,
// which raise std::invalid_argument; the CLI maps the two to exit codes 2 / 1.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// Observations for one regression: y has T rows, X is T x p, row t holds the
// predictors entering the measurement equation at time t.
struct RegressionData {
  VectorXd y;
  MatrixXd X;

  Eigen::Index rows() const { return y.size(); }
  Eigen::Index cols() const { return X.cols(); }
};

inline void check_regression_data(const RegressionData& data) {
  if (data.y.size() == 0) throw std::invalid_argument("regression data: y is empty");
  if (data.X.rows() != data.y.size())
    throw std::invalid_argument("regression data: X has " + std::to_string(data.X.rows()) +
                                " rows but y has " + std::to_string(data.y.size()));
  if (data.X.cols() == 0) throw std::invalid_argument("regression data: X has no columns");
  if (!data.y.allFinite() || !data.X.allFinite())
    throw std::invalid_argument("regression data: non-finite entries");
}

inline double log_normal_density(double x, double mean, double variance) {
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw std::invalid_argument("log_normal_density: variance must be positive");
  const double z = x - mean;
  return -0.5 * std::log(2.0 * M_PI * variance) - 0.5 * z * z / variance;
}

// Nearest integer, ties to even (FP-environment independent).
inline long long round_half_even(double x) {
  const double f = std::floor(x);
  const double frac = x - f;
  if (frac > 0.5) return static_cast<long long>(f) + 1;
  if (frac < 0.5) return static_cast<long long>(f);
  const long long lo = static_cast<long long>(f);
  return (lo % 2 == 0) ? lo : lo + 1;
}

// SplitMix64, used only to derive child seeds. Stable by construction.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Replication/stream r gets an independent seed; mapping is part of the
// reproducibility contract and must not change.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t state = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  return splitmix64(state);
}

// Deterministic draws. std::mt19937_64 output is pinned by the standard;
// std::normal_distribution is not, so normals come from an explicit
// Box-Muller transform (two 53-bit uniforms per draw, cosine branch).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1), 53-bit mantissa.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vbdvs
