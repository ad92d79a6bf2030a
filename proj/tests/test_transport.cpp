#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ptb/errors.hpp"
#include "ptb/numerics.hpp"
#include "ptb/transport.hpp"

using namespace ptb;
using namespace ptb::transport;

namespace {

ContractionFlow unit_flow() { return ContractionFlow(DiagonalGaussian({0.0}, {1.0}), {1.0}); }

std::vector<Observation> fixed_sample(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return SquaredLossWorld().sample(n, rng);
}

// Independent right-endpoint sum of the increment bound on the 1-D world,
// from closed forms only.
double right_endpoint_oracle(const std::vector<Observation>& s, std::size_t steps, double delta) {
  const double n = static_cast<double>(s.size());
  double z2 = 0.0;
  for (const auto& z : s) z2 += z[0] * z[0];
  z2 /= n;
  // grad Delta = z - E z with E z = 0; second moment under (P + P_S) / 2
  const double pair = 0.5 * (1.0 / 3.0 + z2);
  const double c = static_cast<double>(oracle::c_of_n(n));
  const double e_span = -std::expm1(-8.0);
  double total = 0.0, prev_t = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t = k == steps ? 8.0 : -std::log1p(-e_span * static_cast<double>(k) / steps);
    const double w = std::exp(-t) * std::sqrt(2.0);
    const double v = w * std::sqrt(pair);
    const double shift = 1.0 - std::exp(-t);
    const double kl = 0.5 * (std::exp(-2.0 * t) + shift * shift - 1.0) + t;
    const double h = kl + std::log(1.0 / delta);
    const double iota = 2.0 * v * std::sqrt((h + c) / n) + 2.0 * w / std::sqrt(n);
    total += iota * (t - prev_t);
    prev_t = t;
  }
  return total;
}

std::function<IncrementInputs(double)> unit_inputs(const ContractionFlow& flow, const std::vector<Observation>& s,
                                                   double delta, double scale = 1.0) {
  return [&flow, &s, delta, scale](double t) {
    const double w = wasserstein_velocity(flow, t);
    const double v = SquaredLossWorld::deviation_velocity_exact(flow, t, s);
    return IncrementInputs{VelocityPair(w, v, 1.0).scaled(scale), contraction_complexity(flow, t, delta)};
  };
}

}  // namespace

TEST_CASE("contraction flow snapshots") {
  const ContractionFlow flow(DiagonalGaussian({0.0}, {1.0}), {2.0});
  CHECK(snapshot(flow, 0.0).posterior.mean()[0] == 0.0);
  const auto s = snapshot(flow, std::log(2.0));
  CHECK(s.posterior.mean()[0] == doctest::Approx(1.0));
  CHECK(s.posterior.stddev()[0] == doctest::Approx(0.5));
  const auto late = snapshot(flow, 50.0);
  CHECK(late.posterior.mean()[0] == doctest::Approx(2.0));
  CHECK(late.posterior.stddev()[0] < 1e-20);
}

TEST_CASE("Wasserstein velocity") {
  const ContractionFlow pure(DiagonalGaussian({0.4}, {1.0}), {0.4});
  CHECK(wasserstein_velocity(pure, 0.0) == doctest::Approx(1.0));
  CHECK(wasserstein_velocity(pure, std::log(2.0)) == doctest::Approx(0.5));

  SUBCASE("d = 3 Monte Carlo") {
    const ContractionFlow flow(DiagonalGaussian({0.2, -1.0, 0.5}, {0.7, 1.2, 0.3}), {1.0, 0.0, -0.5});
    const double t = 0.7;
    const auto snap = snapshot(flow, t);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal;
    numerics::RunningMoments m;
    for (int s = 0; s < 100000; ++s) {
      double sq = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        const double f = snap.posterior.mean()[i] + snap.posterior.stddev()[i] * normal(rng);
        sq += (flow.attractor()[i] - f) * (flow.attractor()[i] - f);
      }
      m.add(sq);
    }
    const auto est = m.estimate();
    const double w = wasserstein_velocity(flow, t);
    CHECK(std::abs(w * w - est.mean) <= 3.0 * est.std_error);
  }
}

TEST_CASE("deviation velocity in the squared-loss world") {
  const SquaredLossWorld world;
  const auto s = fixed_sample(150, 4);
  const ContractionFlow still(DiagonalGaussian({0.5}, {0.0}), {0.5});
  CHECK(SquaredLossWorld::deviation_velocity_exact(still, 0.3, s) == 0.0);

  const ContractionFlow flow(DiagonalGaussian({0.3}, {0.8}), {-0.5});
  for (double t : {0.0, 1.0}) {
    const auto mc = deviation_velocity(flow, t, &world, s, {}, 50000, 77);
    const double exact = SquaredLossWorld::deviation_velocity_exact(flow, t, s);
    CHECK(std::abs(mc.estimate - exact) <= 3.0 * mc.std_error);
    CHECK(mc.estimate <= world.lipschitz_deviation() * wasserstein_velocity(flow, t) + 3.0 * mc.std_error);
  }
  const auto worst = deviation_velocity(flow, 1.0, nullptr, s, {}, 10, 1, 2.0);
  CHECK(worst.kind == DeviationVelocity::Kind::worst_case);
  CHECK(worst.estimate == doctest::Approx(2.0 * wasserstein_velocity(flow, 1.0)));
}

TEST_CASE("velocity pair invariant") {
  CHECK_NOTHROW(VelocityPair(1.0, 0.5, 1.0));
  CHECK_THROWS_AS(VelocityPair(1.0, 1.5, 1.0), InvalidInput);
}

TEST_CASE("increment bound") {
  CHECK(increment_bound(VelocityPair(0.0, 0.0, 1.0), 3.0, 100).total == 0.0);
  const double c = numerics::c_of_n(100);
  const auto b = increment_bound(VelocityPair(1.0, 0.5, 1.0), 2.0, 100);
  CHECK(b.total == doctest::Approx(2.0 * 0.5 * std::sqrt((2.0 + c) / 100.0) + 0.2).epsilon(1e-14));
  CHECK(increment_bound(VelocityPair(1.0, 0.0, 1.0), 1e6, 100).chaining == 0.0);
}

TEST_CASE("time grid") {
  const auto g = time_grid(8.0, 63);
  CHECK(g.size() == 64);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 8.0);
  for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] > g[k - 1]);
}

TEST_CASE("OT distance upper bound") {
  const auto flow = unit_flow();
  const auto s = fixed_sample(100, 7);

  SUBCASE("matches an independent right-endpoint sum") {
    for (std::size_t steps : {16u, 64u, 256u}) {
      const double got = ot_distance_upper(8.0, steps, 100, unit_inputs(flow, s, 0.1)).total;
      CHECK(got == doctest::Approx(right_endpoint_oracle(s, steps, 0.1)).epsilon(1e-12));
    }
  }
  SUBCASE("grid refinement") {
    const double s64 = ot_distance_upper(8.0, 64, 100, unit_inputs(flow, s, 0.1)).total;
    const double s128 = ot_distance_upper(8.0, 128, 100, unit_inputs(flow, s, 0.1)).total;
    const double s256 = ot_distance_upper(8.0, 256, 100, unit_inputs(flow, s, 0.1)).total;
    // Decreasing integrand: right-endpoint sums increase under refinement.
    CHECK(s64 < s128);
    CHECK(s128 < s256);
    CHECK(std::abs(s128 - s256) / s256 < 0.02);
    // 64 vs 256 misses 2%; the gap is pinned so a change is noticed.
    CHECK(std::abs(s64 - s256) / s256 == doctest::Approx(0.0339).epsilon(0.05));
  }
  SUBCASE("linear in the velocities") {
    const auto full = ot_distance_upper(8.0, 64, 100, unit_inputs(flow, s, 0.1));
    const auto half = ot_distance_upper(8.0, 64, 100, unit_inputs(flow, s, 0.1, 0.5));
    CHECK(half.transport_cost == doctest::Approx(0.5 * full.transport_cost).epsilon(1e-14));
    CHECK(half.chaining_cost == doctest::Approx(0.5 * full.chaining_cost).epsilon(1e-14));
  }
  SUBCASE("stationary flow costs nothing") {
    const ContractionFlow still(DiagonalGaussian({0.5}, {0.0}), {0.5});
    CHECK(ot_distance_upper(8.0, 32, 100, unit_inputs(still, s, 0.1)).total == 0.0);
  }
  SUBCASE("non-monotone integrand is rejected unless allowed") {
    const auto bumpy = [](double t) {
      const double w = 1.0 + std::sin(3.0 * t);
      return IncrementInputs{VelocityPair(w, 0.5 * w, 1.0), 1.0};
    };
    CHECK_THROWS_AS(ot_distance_upper(8.0, 64, 100, bumpy), ValidationError);
    OtOptions o;
    o.allow_non_monotone = true;
    CHECK_FALSE(ot_distance_upper(8.0, 64, 100, bumpy, o).monotone);
  }
}

TEST_CASE("risk assembly") {
  CHECK(corollary1_assemble(0.3, 0.0, 0.0) == 0.3);
  CHECK(corollary1_assemble(0.2, 0.15, 0.05) == doctest::Approx(0.4));
  CHECK(reference_deviation(0.5, 0.1, 400) == doctest::Approx(0.5 * std::sqrt(std::log(20.0) / 400.0)));
}

TEST_CASE("empirical coverage of the increment bound") {
  const SquaredLossWorld world;
  const auto grid = time_grid(8.0, 63);
  const auto rep = empirical_theorem1_check(world, unit_flow(), grid, 100, 500, 0.1, 11);
  CHECK(rep.fraction() <= 0.15);
  CHECK(rep.finite_difference_error < 1e-5);

  const auto half = empirical_theorem1_check(world, unit_flow(), grid, 100, 500, 0.5, 12);
  CHECK(half.fraction() <= 0.55);

  const ContractionFlow still(DiagonalGaussian({0.5}, {0.0}), {0.5});
  CHECK(empirical_theorem1_check(world, still, grid, 100, 50, 0.1, 13).violating_trials == 0);

  SUBCASE("canary: zeroing c(n) alone keeps coverage, zeroing the whole bound breaks it") {
    BoundMutation c_only{0.0, 1.0, 1.0};
    CHECK(empirical_theorem1_check(world, unit_flow(), grid, 100, 500, 0.1, 11, c_only).fraction() <= 0.15);
    BoundMutation zero{0.0, 0.0, 0.0};
    CHECK(empirical_theorem1_check(world, unit_flow(), grid, 100, 500, 0.1, 11, zero).fraction() > 0.15);
  }
}
