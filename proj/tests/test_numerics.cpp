#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ptb/errors.hpp"
#include "ptb/numerics.hpp"

using namespace ptb;
using numerics::Matrix;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(r, c);
  for (double& x : m.entries()) x = normal(rng);
  return m;
}

Eigen::VectorXd eigen_singular_values(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(e).singularValues();
}

}  // namespace

TEST_CASE("spectral_norm on fixed matrices") {
  const double diag[] = {3.0, 1.0};
  CHECK(numerics::spectral_norm(Matrix::diagonal(diag)) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(numerics::spectral_norm(Matrix(4, 4)) == 0.0);
  CHECK(numerics::spectral_norm(Matrix::identity(5)) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("spectral_norm agrees with an Eigen SVD oracle") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Matrix a = random_matrix(8, 8, seed);
    const double want = eigen_singular_values(a)(0);
    CHECK(numerics::spectral_norm(a, 1e-12) == doctest::Approx(want).epsilon(1e-12));
  }
  SUBCASE("rectangular") {
    const Matrix a = random_matrix(7, 3, 11);
    CHECK(numerics::spectral_norm(a) == doctest::Approx(eigen_singular_values(a)(0)).epsilon(1e-12));
  }
  SUBCASE("power route on a large matrix") {
    const Matrix a = random_matrix(48, 48, 12);
    const double want = eigen_singular_values(a)(0);
    CHECK(numerics::spectral_norm(a, 1e-10) == doctest::Approx(want).epsilon(1e-8));
    CHECK(numerics::spectral_norm_power(a, 1e-10, 99) == doctest::Approx(want).epsilon(1e-8));
  }
}

TEST_CASE("singular_values matches Eigen for every singular value") {
  const Matrix a = random_matrix(6, 6, 21);
  const auto got = numerics::singular_values(a);
  const auto want = eigen_singular_values(a);
  REQUIRE(got.size() == static_cast<std::size_t>(want.size()));
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want(i)).epsilon(1e-11));
}

TEST_CASE("spectral_norm rejects bad input") {
  Matrix a(2, 2);
  a(0, 0) = std::nan("");
  CHECK_THROWS_AS(numerics::spectral_norm(a), InvalidInput);
  CHECK_THROWS_AS(numerics::spectral_norm(Matrix(2, 2), 0.0), InvalidInput);
}

TEST_CASE("group norms") {
  CHECK(numerics::group_norm_pq(Matrix::identity(2), 2, 2) == doctest::Approx(std::sqrt(2.0)));
  const Matrix a(2, 2, {1, 2, 3, 4});
  CHECK(numerics::group_norm_pq(a, 2, numerics::kInf) == doctest::Approx(5.0));
  const Matrix r = random_matrix(4, 5, 3);
  CHECK(numerics::group_norm_pq(r, 2, 2) == doctest::Approx(numerics::frobenius_norm(r)));
  CHECK_THROWS_AS(numerics::group_norm_pq(a, 0.5, 2), UnsupportedNorm);
}

TEST_CASE("entropy integral I against a Gauss-Legendre oracle") {
  CHECK(numerics::entropy_integral_I(0.0) == 0.0);
  CHECK(numerics::entropy_integral_I(1.0) == doctest::Approx(1.41386069766548444).epsilon(1e-12));
  for (double a : {1e-4, 0.01, 0.3, 1.0, 2.5, 10.0, 100.0}) {
    const double want = static_cast<double>(oracle::entropy_I(a));
    CHECK(numerics::entropy_integral_I(a) == doctest::Approx(want).epsilon(1e-10));
  }
  CHECK(numerics::entropy_integral_I(10.0) > numerics::entropy_integral_I(5.0));
}

TEST_CASE("integral J and its closed-form bound") {
  CHECK(numerics::integral_bound_J(1.0, 0.0) == doctest::Approx(std::sqrt(std::log(2.0) + 1.0)).epsilon(1e-15));
  for (double a : {0.5, 1.0, 2.0}) {
    for (double b : {0.0, 1.0, 5.0}) {
      const double q = numerics::integral_J(a, b);
      CHECK(q == doctest::Approx(static_cast<double>(oracle::integral_J(a, b))).epsilon(1e-10));
      CHECK(numerics::integral_bound_J(a, b) >= q);
    }
  }
  CHECK(numerics::integral_bound_J(1.0, 2.0) > numerics::integral_bound_J(1.0, 1.0));
}

TEST_CASE("c(n) and gamma_m") {
  CHECK(numerics::c_of_n(1) == doctest::Approx(1.16275536987250505).epsilon(1e-14));
  CHECK(numerics::c_of_n(1000000) > numerics::c_of_n(1000));
  for (std::uint64_t n : {1u, 2u, 10u, 1000u}) CHECK(numerics::c_of_n(n) > 1.0);
  CHECK(numerics::gamma_m(1) == doctest::Approx(1.84018867541344537).epsilon(1e-14));
  CHECK(numerics::gamma_m(16) == doctest::Approx(std::sqrt(2.0 * std::log(32.0 * std::exp(1.0)))));
  double prev = 0.0;
  for (std::uint64_t m = 1; m <= 64; ++m) {
    CHECK(numerics::gamma_m(m) > prev);
    prev = numerics::gamma_m(m);
  }
}

TEST_CASE("adaptive quadrature") {
  const auto r = numerics::integrate([](double x) { return std::sin(x); }, 0.0, M_PI);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-13));
  SUBCASE("singular zero") {
    const auto s = numerics::integrate_from_singular_zero([](double x) { return std::log(x); }, 1.0);
    CHECK(s.value == doctest::Approx(-1.0).epsilon(1e-10));
  }
  SUBCASE("budget exhausted raises with best estimate") {
    numerics::QuadratureSpec tight;
    tight.max_subdivisions = 2;
    tight.abs_tol = 1e-300;
    tight.rel_tol = 1e-300;
    CHECK_THROWS_AS(numerics::integrate([](double x) { return std::sin(1.0 / (x + 1e-3)); }, 0.0, 1.0, tight),
                    AccuracyError);
  }
}

TEST_CASE("log_product and derived seeds") {
  const double f[] = {2.0, 3.0, 0.5};
  CHECK(numerics::log_product(f) == doctest::Approx(std::log(3.0)));
  const double z[] = {1.0, 0.0};
  CHECK(std::isinf(numerics::log_product(z)));
  CHECK(numerics::derive_seed(1, 0) != numerics::derive_seed(1, 1));
  CHECK(numerics::derive_seed(1, 0) == numerics::derive_seed(1, 0));
}

TEST_CASE("RunningMoments") {
  numerics::RunningMoments m;
  for (double x : {1.0, 2.0, 3.0, 4.0}) m.add(x);
  CHECK(m.mean() == doctest::Approx(2.5));
  CHECK(m.variance() == doctest::Approx(5.0 / 3.0));
  CHECK(m.estimate().std_error == doctest::Approx(std::sqrt(5.0 / 12.0)));
}
