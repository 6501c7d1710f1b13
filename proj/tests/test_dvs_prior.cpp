#include <catch2/catch_amalgamated.hpp>

#include "vbdvs/dvs_prior.hpp"

using namespace vbdvs;

TEST_CASE("update_tau2_inv Gamma posterior mean") {
  DvsHyper h;
  h.g0 = 1.0;
  h.h0 = 12.0;
  REQUIRE(update_tau2_inv(0.0, h) == Catch::Approx(1.5 / 12.0).epsilon(1e-15));
  REQUIRE(update_tau2_inv(2.0, h) == Catch::Approx(1.5 / 14.0).epsilon(1e-15));
  h.g0 = 0.01;
  h.h0 = 0.01;
  REQUIRE(update_tau2_inv(1.0, h) == Catch::Approx(1.0).epsilon(1e-15));

  // Decreasing in |m|, symmetric in sign.
  h.g0 = 1.0;
  h.h0 = 12.0;
  double prev = update_tau2_inv(0.0, h);
  for (double m = 0.5; m < 10.0; m += 0.5) {
    const double cur = update_tau2_inv(m, h);
    REQUIRE(cur < prev);
    REQUIRE(cur == update_tau2_inv(-m, h));
    prev = cur;
  }
}

TEST_CASE("update_gamma density odds") {
  SECTION("prior dominates at the extremes") {
    REQUIRE(update_gamma(1.0, 2.0, 1.0, 1e-4) == 1.0);
    REQUIRE(update_gamma(1.0, 2.0, 0.0, 1e-4) == 0.0);
  }

  SECTION("closed form at the origin with even prior odds") {
    for (double c : {1e-4, 1e-6, 0.01, 0.5}) {
      const double expected = std::sqrt(c) / (1.0 + std::sqrt(c));
      for (double tau2 : {0.1, 1.0, 12.0, 1e6})
        REQUIRE(std::abs(update_gamma(0.0, tau2, 0.5, c) - expected) <= 1e-14);
    }
  }

  SECTION("log-space evaluation survives extreme means") {
    const double g = update_gamma(1.0, 1.0, 0.5, 1e-4);
    REQUIRE(g > 1.0 - 1e-12);
    REQUIRE(std::isfinite(update_gamma(1e6, 1.0, 0.5, 1e-4)));
    REQUIRE(update_gamma(1e6, 1.0, 0.5, 1e-4) == 1.0);
    REQUIRE(update_gamma(1e-300, 1e-6, 0.5, 1e-8) > 0.0);
  }

  SECTION("matches naive density ratio where it does not underflow") {
    Rng rng(42);
    for (int i = 0; i < 200; ++i) {
      const double m = 2.0 * rng.normal();
      const double tau2 = 0.5 + 4.0 * rng.uniform01();
      const double pi0 = 0.05 + 0.9 * rng.uniform01();
      const double c = 0.05 + 0.5 * rng.uniform01();  // mild spike keeps densities finite
      const auto dens = [](double x, double var) {
        return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * M_PI * var);
      };
      const double slab = pi0 * dens(m, tau2);
      const double spike = (1.0 - pi0) * dens(m, c * tau2);
      REQUIRE(update_gamma(m, tau2, pi0, c) == Catch::Approx(slab / (slab + spike)).epsilon(1e-12));
    }
  }

  SECTION("symmetric in sign of m, nondecreasing in |m|") {
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
      const double tau2 = 0.1 + 5.0 * rng.uniform01();
      const double pi0 = 0.1 + 0.8 * rng.uniform01();
      const double c = std::pow(10.0, -1.0 - 4.0 * rng.uniform01());
      double prev = update_gamma(0.0, tau2, pi0, c);
      for (double m = 0.05; m < 3.0; m += 0.05) {
        const double cur = update_gamma(m, tau2, pi0, c);
        REQUIRE(cur == update_gamma(-m, tau2, pi0, c));
        REQUIRE(cur >= prev);
        prev = cur;
      }
    }
  }

  SECTION("rejects invalid inputs") {
    REQUIRE_THROWS_AS(update_gamma(0.0, 0.0, 0.5, 1e-4), std::invalid_argument);
    REQUIRE_THROWS_AS(update_gamma(0.0, 1.0, 1.5, 1e-4), std::invalid_argument);
  }
}

TEST_CASE("update_v interpolates spike and slab scales") {
  REQUIRE(update_v(1.0, 5.0, 1e-4) == 5.0);
  REQUIRE(update_v(0.0, 5.0, 1e-4) == Catch::Approx(5e-4).epsilon(1e-15));
  REQUIRE(update_v(0.5, 4.0, 1e-4) == Catch::Approx(0.25 * 1e-4 * 4.0 + 0.5 * 4.0).epsilon(1e-15));

  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const double g = rng.uniform01();
    const double tau2 = 0.01 + 10.0 * rng.uniform01();
    const double c = std::pow(10.0, -1.0 - 5.0 * rng.uniform01());
    const double v = update_v(g, tau2, c);
    REQUIRE(v >= std::min(c * tau2, tau2) * (1.0 - 1e-12));
    REQUIRE(v <= tau2 * (1.0 + 1e-12));
    REQUIRE(v > 0.0);
  }
  REQUIRE_THROWS_AS(update_v(-0.1, 1.0, 1e-4), std::invalid_argument);
}

TEST_CASE("update_pi0 Beta posterior mean") {
  RowVectorXd ones = RowVectorXd::Ones(8);
  RowVectorXd zeros = RowVectorXd::Zero(8);
  REQUIRE(update_pi0(ones) == Catch::Approx(0.9).epsilon(1e-15));
  REQUIRE(update_pi0(zeros) == Catch::Approx(0.1).epsilon(1e-15));
  RowVectorXd half = RowVectorXd::Constant(8, 0.5);
  REQUIRE(update_pi0(half) == Catch::Approx(0.5).epsilon(1e-15));

  // Bounds hold for any admissible row.
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const int p = 1 + static_cast<int>(rng.raw() % 20);
    RowVectorXd row(p);
    for (int j = 0; j < p; ++j) row(j) = rng.uniform01();
    const double pi0 = update_pi0(row);
    REQUIRE(pi0 >= 1.0 / (2.0 + p));
    REQUIRE(pi0 <= (1.0 + p) / (2.0 + p));
  }

  RowVectorXd bad(2);
  bad << 0.5, 1.5;
  REQUIRE_THROWS_AS(update_pi0(bad), std::invalid_argument);
  REQUIRE_THROWS_AS(update_pi0(RowVectorXd()), std::invalid_argument);
}

TEST_CASE("update_w_inv Gamma posterior mean with clamping") {
  DvsHyper h;
  h.c0 = 100.0;
  h.d0 = 1.0;
  REQUIRE(update_w_inv(0.0, h) == Catch::Approx(100.5).epsilon(1e-15));
  REQUIRE(update_w_inv(0.02, h) == Catch::Approx(100.5 / 1.01).epsilon(1e-15));
  h.c0 = 1.0;
  h.d0 = 1.0;
  REQUIRE(update_w_inv(1.0, h) == Catch::Approx(1.0).epsilon(1e-15));

  // Negative diagonals (floating-point artifacts) clamp to the D=0 value.
  h.c0 = 100.0;
  REQUIRE(update_w_inv(-1e-9, h) == update_w_inv(0.0, h));
  REQUIRE(update_w_inv(-5.0, h) == update_w_inv(0.0, h));
}

TEST_CASE("check_hyper rejects out-of-range values") {
  DvsHyper ok;
  REQUIRE_NOTHROW(check_hyper(ok));
  DvsHyper bad = ok;
  bad.c_spike = 1.0;
  REQUIRE_THROWS_AS(check_hyper(bad), std::invalid_argument);
  bad = ok;
  bad.c_spike = 0.0;
  REQUIRE_THROWS_AS(check_hyper(bad), std::invalid_argument);
  bad = ok;
  bad.g0 = -1.0;
  REQUIRE_THROWS_AS(check_hyper(bad), std::invalid_argument);
  bad = ok;
  bad.d0 = 0.0;
  REQUIRE_THROWS_AS(check_hyper(bad), std::invalid_argument);
}
