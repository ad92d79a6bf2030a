#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ptb/errors.hpp"
#include "ptb/nn_cert.hpp"

using namespace ptb;
using namespace ptb::nn;

namespace {

NetworkWeights random_net(std::size_t depth, std::size_t width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(width)));
  NetworkWeights w;
  for (std::size_t k = 0; k < depth; ++k) {
    Matrix m(width, width);
    for (double& x : m.entries()) x = normal(rng);
    w.layers.push_back(m);
  }
  return w;
}

double eigen_spectral(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(e).singularValues()(0);
}

NetworkWeights scaled_identity(std::size_t depth, std::size_t width, double alpha) {
  NetworkWeights w = NetworkWeights::identity(depth, width);
  for (auto& l : w.layers) l = l.scaled(alpha);
  return w;
}

}  // namespace

TEST_CASE("spectral statistics") {
  const auto id = spectral_stats(NetworkWeights::identity(3, 16));
  for (double l : id.lambda_k) CHECK(l == doctest::Approx(1.0));
  CHECK(id.lambda_bar == doctest::Approx(1.0));
  CHECK(id.total_radius == doctest::Approx(1.0));
  CHECK(id.frob_norm == doctest::Approx(std::sqrt(48.0)));

  const auto two = spectral_stats(scaled_identity(3, 4, 2.0));
  CHECK(two.lambda_bar == doctest::Approx(2.0));
  CHECK(two.total_radius == doctest::Approx(8.0));

  const auto net = random_net(3, 8, 5);
  const auto s = spectral_stats(net);
  for (std::size_t k = 0; k < 3; ++k) CHECK(s.lambda_k[k] == doctest::Approx(eigen_spectral(net.layers[k])).epsilon(1e-12));
}

TEST_CASE("identical singular values give |w| / L_bar = sqrt(mK)") {
  // orthogonal layers scaled by a common factor
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  NetworkWeights w;
  for (int k = 0; k < 3; ++k) {
    Eigen::MatrixXd a(8, 8);
    for (int i = 0; i < 64; ++i) a.data()[i] = normal(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
    Matrix m(8, 8);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) m(i, j) = 1.7 * q(i, j);
    w.layers.push_back(m);
  }
  const auto s = spectral_stats(w);
  CHECK(s.frob_norm / s.lambda_bar == doctest::Approx(std::sqrt(24.0)).epsilon(1e-10));
}

TEST_CASE("rebalancing equalizes the layer norms and keeps R") {
  const auto net = random_net(3, 8, 7);
  const auto before = spectral_stats(net);
  const auto after = spectral_stats(rebalance(net));
  for (double l : after.lambda_k) CHECK(l == doctest::Approx(before.lambda_bar).epsilon(1e-10));
  CHECK(after.total_radius == doctest::Approx(before.total_radius).epsilon(1e-10));
}

TEST_CASE("layerwise metric") {
  const auto one = sigma_field_layerwise(spectral_stats(NetworkWeights::identity(1, 4)));
  REQUIRE(one.size() == 1);
  CHECK(one[0] == doctest::Approx(0.25));

  const auto s = spectral_stats(random_net(3, 6, 9));
  for (double x : sigma_field_layerwise(s)) CHECK(x > 0.0);

  const auto v = random_net(3, 6, 10);
  CHECK(norm_bound_sigma_inv(s, v) >= sigma_inv_norm_direct(s, v) * (1.0 - 1e-12));
  CHECK(norm_bound_sigma_inv(s, v) == doctest::Approx(sigma_inv_norm_direct(s, v)).epsilon(1e-12));

  const auto big = spectral_stats(scaled_identity(3, 6, 1.0));
  const auto net2 = random_net(3, 6, 11);
  NetworkWeights net3 = net2;
  for (auto& l : net3.layers) l = l.scaled(2.0);
  // scaling every layer by 2 multiplies R by 8 and each lambda_k by 2: the
  // bound scales by R / lambda = 4
  CHECK(norm_bound_sigma_inv(spectral_stats(net3), v) ==
        doctest::Approx(4.0 * norm_bound_sigma_inv(spectral_stats(net2), v)).epsilon(1e-10));

  NetworkWeights zero = v;
  for (auto& l : zero.layers) l = Matrix(6, 6);
  CHECK(norm_bound_sigma_inv(big, zero) == 0.0);

  // unit Frobenius directions on identity layers
  NetworkWeights unit = NetworkWeights::identity(3, 6);
  for (auto& l : unit.layers) l = l.scaled(1.0 / std::sqrt(6.0));
  CHECK(norm_bound_sigma_inv(big, unit) == doctest::Approx(6.0));
  const double ones[] = {1.0, 1.0, 1.0};
  CHECK(norm_bound_lambda(big, ones) == doctest::Approx(6.0));
  const double zeros[] = {0.0, 0.0, 0.0};
  CHECK(norm_bound_lambda(big, zeros) == 0.0);
}

TEST_CASE("Gaussian spectral bound") {
  Matrix mean(3, 3);
  mean(0, 0) = 2.0;
  CHECK(gaussian_spectral_bound(mean, Matrix(3, 3)) == doctest::Approx(2.0));
  CHECK(gaussian_spectral_bound(Matrix(5, 5), Matrix(5, 5, 1.0)) ==
        doctest::Approx(static_cast<double>(oracle::gamma_m(5)) * std::sqrt(5.0)));
}

TEST_CASE("psi and phi norms") {
  const Matrix a(2, 2, {1, 2, 3, 4});
  CHECK(psi_norm(a) == doctest::Approx(5.0));
  CHECK(phi_inf2_norm(a) == doctest::Approx(std::sqrt(4.0 + 16.0)));
}

TEST_CASE("contraction bounds") {
  const auto w = rebalance(random_net(3, 8, 13));
  NetworkWeights zero = w;
  for (auto& l : zero.layers) l = Matrix(8, 8);
  const auto still = l2_contraction_bounds(w, w, zero, 0.5);
  CHECK(still.sigma_inv_bound == 0.0);
  CHECK(still.lambda_bound == 0.0);

  const auto s = spectral_stats(w);
  const double sigma = stochastic_predictor_stddev(s, 1.0);
  NetworkWeights s0 = w;
  for (auto& l : s0.layers) l = Matrix(8, 8, sigma);
  const double gamma = static_cast<double>(oracle::gamma_m(8));
  for (double t : {0.0, 1.0, 3.0}) {
    const auto b = l2_contraction_bounds(w, w, s0, t, ContractionMode::envelope);
    const double lam = std::exp(-t) * 2.0 * std::exp(1.0) * s.total_radius / gamma;
    CHECK(b.lambda_bound == doctest::Approx(lam).epsilon(1e-10));
    CHECK(b.sigma_inv_bound == doctest::Approx(lam * std::sqrt(8.0)).epsilon(1e-10));
    const auto lemma = l2_contraction_bounds(w, w, s0, t, ContractionMode::lemma);
    CHECK(lemma.lambda_bound <= b.lambda_bound * (1.0 + 1e-12));
  }
  const auto b1 = l2_contraction_bounds(w, w, s0, 1.0, ContractionMode::envelope);
  const auto b2 = l2_contraction_bounds(w, w, s0, 2.0, ContractionMode::envelope);
  CHECK(b2.lambda_bound / b1.lambda_bound == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("derandomization cost") {
  const auto id = NetworkWeights::identity(3, 16);
  const auto c = derand_cost(id, 1.0, 10000, 0.1);
  CHECK(c.derand_cost == doctest::Approx(c.entropy_term + c.transport_term + c.log_term).epsilon(1e-14));
  CHECK(derand_cost(id, 1e-6, 10000, 0.1).derand_cost < 1e-3 * c.derand_cost);
  for (double rho : {0.25, 1.0, 4.0}) {
    CHECK(derand_cost(id, rho, 10000, 0.1, DerandMode::appendix_tight).derand_cost <=
          derand_cost(id, rho, 10000, 0.1, DerandMode::theorem2).derand_cost);
  }
  const auto net = random_net(3, 8, 17);
  for (double rho : {0.25, 1.0, 4.0}) {
    CHECK(derand_cost(net, rho, 5000, 0.05, DerandMode::appendix_tight).derand_cost <=
          derand_cost(net, rho, 5000, 0.05, DerandMode::theorem2).derand_cost);
  }
  CHECK(parse_derand_mode("appendix_tight") == DerandMode::appendix_tight);
  CHECK_THROWS_AS(parse_derand_mode("loose"), InvalidInput);
  CHECK_THROWS_AS(derand_cost(id, 1.0, 10000, 1.5), InvalidInput);
  NetworkWeights dead = id;
  dead.layers[1] = Matrix(16, 16);
  CHECK_THROWS(derand_cost(dead, 1.0, 10000, 0.1));
}

TEST_CASE("risk certificate") {
  const auto id = NetworkWeights::identity(3, 16);
  const auto c = risk_certificate(id, 10000, 0.1, 0.05);
  CHECK(c.derand.derand_cost >= 0.0);
  CHECK(c.reference_deviation >= 0.0);
  CHECK(c.total >= c.emp_risk);
  CHECK(c.total == doctest::Approx(c.emp_risk + c.derand.derand_cost + c.reference_deviation));
  CHECK(c.vc_baseline == doctest::Approx(std::sqrt(768.0 * 3.0 / 1e4)));
  CHECK(c.below_vc_baseline == (c.gap() < c.vc_baseline));
  const auto c4 = risk_certificate(id, 40000, 0.1, 0.05);
  CHECK(c.gap() / c4.gap() >= 1.8);
  CHECK(c.gap() / c4.gap() <= 2.2);

  CertOptions raw;
  raw.rebalance = false;
  CHECK_FALSE(risk_certificate(id, 10000, 0.1, 0.0, DerandMode::theorem2, raw).warnings.empty());
  CHECK(vc_baseline(768, 3, 40000) == doctest::Approx(0.5 * vc_baseline(768, 3, 10000)));
}
