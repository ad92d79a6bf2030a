#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "ptb/divergences.hpp"
#include "ptb/errors.hpp"
#include "ptb/numerics.hpp"

using namespace ptb;
using namespace ptb::divergences;

TEST_CASE("Gaussian KL closed forms") {
  const DiagonalGaussian q({0.3, -1.0}, {0.5, 2.0});
  CHECK(kl_gaussian_gaussian(q, q) == doctest::Approx(0.0));
  const DiagonalGaussian a({1.5}, 0.7), b({0.0}, 0.7);
  CHECK(kl_gaussian_gaussian(a, b) == doctest::Approx(1.5 * 1.5 / (2 * 0.49)));
  CHECK(std::isinf(kl_gaussian_gaussian(DiagonalGaussian({0.0}, 0.0), b)));
  CHECK_THROWS_AS(DiagonalGaussian({0.0}, -1.0), InvalidInput);
}

TEST_CASE("Gaussian KL agrees with a Monte Carlo estimate in d = 3") {
  const DiagonalGaussian q({0.5, -0.2, 1.0}, {0.8, 1.3, 0.6});
  const DiagonalGaussian u({0.0, 0.4, -0.5}, {1.0, 0.9, 1.4});
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  numerics::RunningMoments m;
  for (int s = 0; s < 100000; ++s) {
    double log_ratio = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double x = q.mean()[i] + q.stddev()[i] * normal(rng);
      const double zq = (x - q.mean()[i]) / q.stddev()[i];
      const double zu = (x - u.mean()[i]) / u.stddev()[i];
      log_ratio += -0.5 * zq * zq - std::log(q.stddev()[i]) + 0.5 * zu * zu + std::log(u.stddev()[i]);
    }
    m.add(log_ratio);
  }
  const auto est = m.estimate();
  CHECK(std::abs(kl_gaussian_gaussian(q, u) - est.mean) <= 3.0 * est.std_error);
}

TEST_CASE("Cauchy KL bounds") {
  const std::vector<double> zero{0.0};
  CHECK(kl_gaussian_cauchy_bound(zero, 1.0, CauchyBoundMode::tight) == doctest::Approx(std::log(2.0)));
  for (double mu : {0.0, 1.0, 5.0}) {
    for (double rho : {0.1, 1.0, 10.0}) {
      const double truth = static_cast<double>(oracle::kl_normal_cauchy(mu, rho));
      CHECK(kl_gaussian_cauchy_1d_quadrature(mu, rho) == doctest::Approx(truth).epsilon(1e-10));
      const std::vector<double> m{mu};
      CHECK(kl_gaussian_cauchy_bound(m, rho, CauchyBoundMode::tight) >= truth - 1e-6);
      CHECK(kl_gaussian_cauchy_bound(m, rho, CauchyBoundMode::quadratic) >= truth - 1e-6);
    }
  }
  SUBCASE("grows without bound as rho grows") {
    double prev = 0.0;
    for (double rho : {10.0, 1e3, 1e5, 1e7}) {
      const double v = kl_gaussian_cauchy_bound(zero, rho, CauchyBoundMode::tight);
      CHECK(v > prev);
      prev = v;
    }
    CHECK(prev > 15.0);
  }
  SUBCASE("vector and scalar overloads agree") {
    const std::vector<double> mu{1.0, 2.0, -0.5};
    CHECK(kl_gaussian_cauchy_bound(mu, 0.3, CauchyBoundMode::quadratic) ==
          kl_gaussian_cauchy_bound(5.25, 3, 0.3, CauchyBoundMode::quadratic));
  }
  CHECK_THROWS_AS(kl_gaussian_cauchy_bound(zero, 0.0, CauchyBoundMode::tight), InvalidInput);
}

TEST_CASE("generalized Cauchy prior density") {
  const double origin[] = {0.0};
  CHECK(cauchy_prior_log_density(origin) == doctest::Approx(-std::log(std::numbers::pi)));
  const double p[] = {1.7}, n[] = {-1.7};
  CHECK(cauchy_prior_log_density(p) == doctest::Approx(cauchy_prior_log_density(n)));
  // mass of the d = 1 density over [-1e6, 1e6], with x = e^v on the half line
  const auto g = [](oracle::real v) {
    const double x = std::exp(static_cast<double>(v));
    return static_cast<oracle::real>(std::exp(cauchy_prior_log_density(std::span<const double>(&x, 1))) * x);
  };
  const oracle::real mass = 2 * oracle::converged(g, -40.0L, std::log(1e6L));
  CHECK(static_cast<double>(mass) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(GeneralizedCauchyPrior(1).sphere_area() == doctest::Approx(2.0));
  CHECK(GeneralizedCauchyPrior(3).sphere_area() == doctest::Approx(4.0 * std::numbers::pi));
}

TEST_CASE("complexity H") {
  CHECK(complexity_H(0.0, std::exp(-1.0)).h_delta == doctest::Approx(1.0));
  CHECK(complexity_H(2.5, 0.05).h_delta == doctest::Approx(5.49573227355399099).epsilon(1e-14));
  CHECK(std::isinf(complexity_H(numerics::kInf, 0.1).h_delta));
  CHECK_THROWS_AS(complexity_H(1.0, 1.0), InvalidInput);
}
