#include <doctest.h>

#include <cmath>

#include "ptb/errors.hpp"
#include "ptb/pac_core.hpp"

using namespace ptb;
using namespace ptb::pac;

TEST_CASE("centrality functions") {
  CHECK(centrality_hoeffding(0.3, 0.3) == 0.0);
  CHECK(centrality_hoeffding(-1.0, 1.0) == doctest::Approx(0.5));
  CHECK(centrality_hoeffding(0.0, 1.0) == doctest::Approx(0.125));

  CHECK(centrality_bennett(1.0, 0.0) == 0.0);
  CHECK(centrality_bennett(1.0, 1.0) == doctest::Approx(std::exp(1.0) - 2.0));
  CHECK(centrality_bennett(1e-6, 1.0) == doctest::Approx(0.5).epsilon(1e-5));

  CHECK(centrality_rademacher(0.0, 0.0) == 0.0);
  CHECK(centrality_rademacher(1.0, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("centrality spec dispatch") {
  CentralitySpec s;
  s.kind = CentralityKind::hoeffding;
  s.a = -1.0;
  s.b = 1.0;
  CHECK(s.eta(0.2) == doctest::Approx(0.5));
  s.kind = CentralityKind::bennett;
  s.b = 1.0;
  s.second_moment = 1.0;
  CHECK(s.eta(0.0) == doctest::Approx(std::exp(1.0) - 2.0));
}

TEST_CASE("centrality Monte Carlo: Gaussian Rademacher case") {
  const auto est = centrality_monte_carlo(CentralityScenario::rademacher_gaussian, 1000000, 5);
  CHECK(est.mean <= 1.0 + 3.0 * est.std_error);
  CHECK(est.samples == 1000000);
}

TEST_CASE("PAC right-hand sides") {
  CHECK(abstract_pac_rhs(0.0, 2.3, 100) == doctest::Approx(0.023));
  CHECK(abstract_pac_rhs(0.17, 0.0, 100) == doctest::Approx(0.17));
  const double want = std::sqrt(2.0 * std::log(2.0 * std::sqrt(102.0 * std::exp(1.0))) / 100.0);
  CHECK(subgaussian_pac_bound(1.0, 0.0, 102) == doctest::Approx(want).epsilon(1e-14));
  CHECK(subgaussian_pac_bound(2.0, 1.3, 500) == doctest::Approx(2.0 * subgaussian_pac_bound(1.0, 1.3, 500)));
  CHECK_THROWS_AS(subgaussian_pac_bound(1.0, 0.0, 2), InvalidInput);
}

TEST_CASE("coin world and coverage") {
  const auto world = coin_world();
  CHECK(world.predictors() == 8);
  CHECK(world.outcomes() == 256);
  CHECK(world.risk(0) == doctest::Approx(0.1));
  CHECK(world.risk(7) == doctest::Approx(0.8));

  const auto sg = subgaussian_coverage(world, 200, 0.1, 2000, 17);
  CHECK(sg.fraction() <= 0.13);
  const auto grid = subgaussian_coverage_posterior_grid(world, 200, 0.1, 2000, 18);
  CHECK(grid.fraction() <= 0.13);
  const double lambda = std::sqrt(8.0 * std::log(10.0) / 200.0);
  const auto ab = abstract_coverage(world, 200, 0.1, lambda, 2000, 19);
  CHECK(ab.fraction() <= 0.13);
}
