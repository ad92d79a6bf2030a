#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "ptb/numerics.hpp"

namespace ptb::pac {

enum class CentralityKind { hoeffding, bennett, rademacher };

/// Parameters of a centrality function. Fields not used by `kind` are ignored.
struct CentralitySpec {
  CentralityKind kind = CentralityKind::hoeffding;
  double a = 0.0;              // hoeffding lower bound
  double b = 0.0;              // hoeffding upper bound, bennett upper bound
  double second_moment = 0.0;  // bennett, rademacher

  void validate() const;
  /// eta at an observed value x (x only matters for rademacher).
  double eta(double x) const;
};

/// (b - a)^2 / 8
double centrality_hoeffding(double a, double b);
/// (e^b - b - 1) / b^2 * second_moment
double centrality_bennett(double b, double second_moment);
/// (x^2 + second_moment) / 2. Caller guarantees the process is centered.
double centrality_rademacher(double x_value, double second_moment);

/// eta_expectation + h_delta / n
double abstract_pac_rhs(double eta_expectation, double h_delta, std::uint64_t n);

/// sigma * sqrt(2 (h_delta + ln(2 sqrt(e n))) / (n - 2)), n >= 3.
double subgaussian_pac_bound(double sigma, double h_delta, std::uint64_t n);

/// Finitely many predictors, finitely many outcomes, an explicit loss table.
class FiniteProcessWorld {
 public:
  /// loss[f][z]; outcome_probs sums to 1.
  FiniteProcessWorld(std::vector<double> outcome_probs, std::vector<std::vector<double>> loss);

  std::size_t predictors() const noexcept { return loss_.size(); }
  std::size_t outcomes() const noexcept { return probs_.size(); }
  double loss(std::size_t f, std::size_t z) const { return loss_[f][z]; }
  /// r(f) = P loss(f, .)
  double risk(std::size_t f) const;

  /// Outcome counts of an i.i.d. sample of size n.
  std::vector<std::size_t> sample_counts(std::size_t n, std::mt19937_64& rng) const;
  /// P_S loss(f, .) from outcome counts.
  double empirical_risk(std::size_t f, const std::vector<std::size_t>& counts) const;

 private:
  std::vector<double> probs_;
  std::vector<std::vector<double>> loss_;
};

/// 8 independent coins with biases 0.1, 0.2, ..., 0.8. Outcome z in [0, 256)
/// encodes all flips; predictor f suffers loss bit f of z.
FiniteProcessWorld coin_world();

enum class CentralityScenario {
  hoeffding_uniform,           // X ~ U[-1, 1], eta = (b - a)^2 / 8
  bennett_shifted_bernoulli,   // X = B - p, B ~ Bernoulli(p), b = 1 - p
  rademacher_gaussian,         // X ~ N(0, 1)
  rademacher_uniform,          // X ~ U[-1, 1]
};

const char* scenario_name(CentralityScenario s);

/// Monte Carlo estimate of P[e^{X - eta}].
numerics::MonteCarloEstimate centrality_monte_carlo(CentralityScenario scenario, std::size_t samples,
                                                    std::uint64_t seed);

struct CoverageReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double fraction() const noexcept {
    return trials == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(trials);
  }
  double worst_slack = 0.0;  // min over trials of (bound - lhs); negative on violation
};

/// Standard subgaussian bound with sigma = 1/2 on `world`, posterior = prior
/// = uniform over predictors. Counts trials with Q P_S Delta > bound.
CoverageReport subgaussian_coverage(const FiniteProcessWorld& world, std::size_t n, double delta,
                                    std::size_t trials, std::uint64_t seed);

/// Same bound checked uniformly over a posterior grid (uniform and every
/// Dirac); a trial violates if any grid posterior does.
CoverageReport subgaussian_coverage_posterior_grid(const FiniteProcessWorld& world, std::size_t n,
                                                   double delta, std::size_t trials,
                                                   std::uint64_t seed);

/// Abstract bound with X = lambda Delta and Hoeffding centrality lambda^2/8
/// (losses in [0, 1]); lambda fixed before sampling.
CoverageReport abstract_coverage(const FiniteProcessWorld& world, std::size_t n, double delta,
                                 double lambda, std::size_t trials, std::uint64_t seed);

}  // namespace ptb::pac
