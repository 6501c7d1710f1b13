#include <catch2/catch_amalgamated.hpp>

#include "vbdvs/volatility.hpp"

using namespace vbdvs;

TEST_CASE("filter_precision hand recursions") {
  SECTION("single step") {
    const auto path = filter_precision(VectorXd::Constant(1, 1.0), 0.01, 0.01, 0.8);
    REQUIRE(path.a(0) == Catch::Approx(0.508).epsilon(1e-15));
    REQUIRE(path.b(0) == Catch::Approx(0.508).epsilon(1e-15));
    REQUIRE(path.phi_filt(0) == Catch::Approx(1.0).epsilon(1e-15));
  }

  SECTION("two steps") {
    VectorXd r(2);
    r << 0.0, 2.0;
    const auto path = filter_precision(r, 1.0, 1.0, 0.8);
    REQUIRE(path.a(0) == Catch::Approx(1.3).epsilon(1e-15));
    REQUIRE(path.b(0) == Catch::Approx(0.8).epsilon(1e-15));
    REQUIRE(path.a(1) == Catch::Approx(1.54).epsilon(1e-14));
    REQUIRE(path.b(1) == Catch::Approx(1.64).epsilon(1e-14));
    REQUIRE(path.phi_filt(1) == Catch::Approx(1.54 / 1.64).epsilon(1e-14));
  }

  SECTION("no discounting integrates all past") {
    const auto path = filter_precision(VectorXd::Zero(5), 0.5, 2.0, 1.0);
    for (int t = 0; t < 5; ++t) {
      REQUIRE(path.a(t) == Catch::Approx(0.5 + 0.5 * (t + 1)).epsilon(1e-15));
      REQUIRE(path.b(t) == Catch::Approx(2.0).epsilon(1e-15));
    }
    REQUIRE(path.phi_filt(4) > path.phi_filt(0));
  }

  SECTION("prior mean preserved under discounting") {
    Rng rng(8);
    for (int rep = 0; rep < 50; ++rep) {
      VectorXd r(30);
      for (int t = 0; t < 30; ++t) r(t) = rng.uniform01() * 4.0;
      const double delta = 0.5 + 0.5 * rng.uniform01();
      const auto path = filter_precision(r, 0.01 + rng.uniform01(), 0.01 + rng.uniform01(), delta);
      for (int t = 0; t < 30; ++t) {
        // The time-(t+1) prior mean (delta a_t)/(delta b_t) equals a_t/b_t;
        // each side carries at most ~3 ulp of rounding.
        const double lhs = (delta * path.a(t)) / (delta * path.b(t));
        const double rhs = path.a(t) / path.b(t);
        REQUIRE(std::abs(lhs - rhs) <= 1e-15 * std::abs(rhs));
      }
    }
  }

  SECTION("rejects invalid inputs") {
    const VectorXd r = VectorXd::Ones(3);
    REQUIRE_THROWS_AS(filter_precision(r, 0.01, 0.01, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(filter_precision(r, 0.01, 0.01, 1.5), std::invalid_argument);
    REQUIRE_THROWS_AS(filter_precision(r, -1.0, 0.01, 0.8), std::invalid_argument);
    REQUIRE_THROWS_AS(filter_precision(VectorXd::Constant(1, -0.5), 1.0, 1.0, 0.8),
                      std::invalid_argument);
  }
}

TEST_CASE("smooth_precision backward convex combination") {
  SECTION("terminal condition and one-step arithmetic") {
    VectorXd phi(2);
    phi << 1.0, 2.0;
    const VectorXd sm = smooth_precision(phi, 0.8);
    REQUIRE(sm(1) == 2.0);
    REQUIRE(sm(0) == Catch::Approx(1.8).epsilon(1e-15));
  }

  SECTION("constant input is a fixed point") {
    const VectorXd sm = smooth_precision(VectorXd::Constant(20, 3.7), 0.8);
    REQUIRE((sm.array() == 3.7).all());
  }

  SECTION("three-step hand recursion") {
    VectorXd phi(3);
    phi << 2.0, 0.5, 1.0;
    const double delta = 0.6;
    const VectorXd sm = smooth_precision(phi, delta);
    const double s2 = 1.0;
    const double s1 = (1.0 - delta) * 0.5 + delta * s2;
    const double s0 = (1.0 - delta) * 2.0 + delta * s1;
    REQUIRE(sm(2) == s2);
    REQUIRE(sm(1) == Catch::Approx(s1).epsilon(1e-15));
    REQUIRE(sm(0) == Catch::Approx(s0).epsilon(1e-15));
  }

  SECTION("path stays inside the filtered range") {
    Rng rng(21);
    for (int rep = 0; rep < 100; ++rep) {
      VectorXd phi(40);
      for (int t = 0; t < 40; ++t) phi(t) = 0.05 + 5.0 * rng.uniform01();
      const VectorXd sm = smooth_precision(phi, 0.5 + 0.49 * rng.uniform01());
      const double lo = phi.minCoeff(), hi = phi.maxCoeff();
      const double eps = 1e-12 * hi;
      for (int t = 0; t < 40; ++t) {
        REQUIRE(sm(t) >= lo - eps);
        REQUIRE(sm(t) <= hi + eps);
      }
    }
  }
}

TEST_CASE("precision_to_variance") {
  VectorXd phi(2);
  phi << 1.8, 2.0;
  const VectorXd s2 = precision_to_variance(phi);
  REQUIRE(s2(0) == Catch::Approx(1.0 / 1.8).epsilon(1e-15));
  REQUIRE(s2(1) == 0.5);
  REQUIRE_THROWS_AS(precision_to_variance(VectorXd::Zero(1)), numerical_error);
}

TEST_CASE("undiscounted filter recovers a constant precision statistically") {
  // r_t drawn as squared N(0, sigma2) residuals; with delta = 1 the filtered
  // precision pools the whole sample and should approach 1/sigma2.
  Rng rng(2718);
  const int T = 2000;
  const double sigma2 = 0.49;
  VectorXd r(T);
  for (int t = 0; t < T; ++t) {
    const double e = std::sqrt(sigma2) * rng.normal();
    r(t) = e * e;
  }
  const auto path = filter_precision(r, 0.01, 0.01, 1.0);
  REQUIRE(std::abs(path.phi_filt(T - 1) - 1.0 / sigma2) < 0.15 / sigma2);
}
