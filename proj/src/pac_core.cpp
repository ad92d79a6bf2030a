#include "ptb/pac_core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "ptb/errors.hpp"

namespace ptb::pac {

void CentralitySpec::validate() const {
  switch (kind) {
    case CentralityKind::hoeffding:
      if (!(a <= b)) throw InvalidInput("hoeffding centrality: need a <= b");
      return;
    case CentralityKind::bennett:
      if (!(b > 0.0) || !(second_moment >= 0.0))
        throw InvalidInput("bennett centrality: need b > 0 and second_moment >= 0");
      return;
    case CentralityKind::rademacher:
      if (!(second_moment >= 0.0)) throw InvalidInput("rademacher centrality: second_moment must be >= 0");
      return;
  }
}

double CentralitySpec::eta(double x) const {
  switch (kind) {
    case CentralityKind::hoeffding: return centrality_hoeffding(a, b);
    case CentralityKind::bennett: return centrality_bennett(b, second_moment);
    case CentralityKind::rademacher: return centrality_rademacher(x, second_moment);
  }
  throw InvalidInput("unknown centrality kind");
}

double centrality_hoeffding(double a, double b) {
  if (!(a <= b)) throw InvalidInput("centrality_hoeffding: need a <= b");
  return (b - a) * (b - a) / 8.0;
}

double centrality_bennett(double b, double second_moment) {
  if (!(b > 0.0)) throw InvalidInput("centrality_bennett: need b > 0");
  if (!(second_moment >= 0.0)) throw InvalidInput("centrality_bennett: second_moment must be >= 0");
  // expm1(b) - b loses no digits for small b the way exp(b) - b - 1 does.
  return (std::expm1(b) - b) / (b * b) * second_moment;
}

double centrality_rademacher(double x_value, double second_moment) {
  return 0.5 * (x_value * x_value + second_moment);
}

double abstract_pac_rhs(double eta_expectation, double h_delta, std::uint64_t n) {
  if (n == 0) throw InvalidInput("abstract_pac_rhs: n must be >= 1");
  return eta_expectation + h_delta / static_cast<double>(n);
}

double subgaussian_pac_bound(double sigma, double h_delta, std::uint64_t n) {
  if (n < 3) throw InvalidInput("subgaussian_pac_bound: n must be >= 3");
  if (!(sigma > 0.0)) throw InvalidInput("subgaussian_pac_bound: sigma must be > 0");
  const double nd = static_cast<double>(n);
  const double log_term = std::log(2.0) + 0.5 * (1.0 + std::log(nd));
  return sigma * std::sqrt(2.0 * (h_delta + log_term) / (nd - 2.0));
}

// ---------------------------------------------------------------------------

FiniteProcessWorld::FiniteProcessWorld(std::vector<double> outcome_probs,
                                       std::vector<std::vector<double>> loss)
    : probs_(std::move(outcome_probs)), loss_(std::move(loss)) {
  if (probs_.empty() || loss_.empty()) throw InvalidInput("FiniteProcessWorld: empty world");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw InvalidInput("FiniteProcessWorld: negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidInput("FiniteProcessWorld: probabilities must sum to 1");
  for (const auto& row : loss_) {
    if (row.size() != probs_.size()) throw InvalidInput("FiniteProcessWorld: loss table shape mismatch");
    for (double l : row) {
      if (!std::isfinite(l)) throw InvalidInput("FiniteProcessWorld: non-finite loss");
    }
  }
}

double FiniteProcessWorld::risk(std::size_t f) const {
  double r = 0.0;
  for (std::size_t z = 0; z < probs_.size(); ++z) r += probs_[z] * loss_[f][z];
  return r;
}

std::vector<std::size_t> FiniteProcessWorld::sample_counts(std::size_t n, std::mt19937_64& rng) const {
  std::discrete_distribution<std::size_t> dist(probs_.begin(), probs_.end());
  std::vector<std::size_t> counts(probs_.size(), 0);
  for (std::size_t i = 0; i < n; ++i) ++counts[dist(rng)];
  return counts;
}

double FiniteProcessWorld::empirical_risk(std::size_t f, const std::vector<std::size_t>& counts) const {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t z = 0; z < counts.size(); ++z) {
    s += static_cast<double>(counts[z]) * loss_[f][z];
    n += counts[z];
  }
  return s / static_cast<double>(n);
}

FiniteProcessWorld coin_world() {
  constexpr std::size_t coins = 8;
  constexpr std::size_t outcomes = std::size_t{1} << coins;
  std::vector<double> bias(coins);
  for (std::size_t f = 0; f < coins; ++f) bias[f] = 0.1 * static_cast<double>(f + 1);

  std::vector<double> probs(outcomes, 1.0);
  std::vector<std::vector<double>> loss(coins, std::vector<double>(outcomes, 0.0));
  for (std::size_t z = 0; z < outcomes; ++z) {
    for (std::size_t f = 0; f < coins; ++f) {
      const bool heads = (z >> f) & 1U;
      probs[z] *= heads ? bias[f] : 1.0 - bias[f];
      loss[f][z] = heads ? 1.0 : 0.0;
    }
  }
  // Renormalize away the product round-off so the world validates.
  double total = 0.0;
  for (double p : probs) total += p;
  for (double& p : probs) p /= total;
  return FiniteProcessWorld(std::move(probs), std::move(loss));
}

// ---------------------------------------------------------------------------

const char* scenario_name(CentralityScenario s) {
  switch (s) {
    case CentralityScenario::hoeffding_uniform: return "hoeffding_uniform";
    case CentralityScenario::bennett_shifted_bernoulli: return "bennett_shifted_bernoulli";
    case CentralityScenario::rademacher_gaussian: return "rademacher_gaussian";
    case CentralityScenario::rademacher_uniform: return "rademacher_uniform";
  }
  return "unknown";
}

numerics::MonteCarloEstimate centrality_monte_carlo(CentralityScenario scenario, std::size_t samples,
                                                    std::uint64_t seed) {
  if (samples == 0) throw InvalidInput("centrality_monte_carlo: samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr double p = 0.3;
  std::bernoulli_distribution bernoulli(p);

  CentralitySpec spec;
  std::function<double()> draw;
  switch (scenario) {
    case CentralityScenario::hoeffding_uniform:
      spec = {CentralityKind::hoeffding, -1.0, 1.0, 0.0};
      draw = [&] { return uniform(rng); };
      break;
    case CentralityScenario::bennett_shifted_bernoulli:
      spec = {CentralityKind::bennett, 0.0, 1.0 - p, p * (1.0 - p)};
      draw = [&] { return (bernoulli(rng) ? 1.0 : 0.0) - p; };
      break;
    case CentralityScenario::rademacher_gaussian:
      spec = {CentralityKind::rademacher, 0.0, 0.0, 1.0};
      draw = [&] { return normal(rng); };
      break;
    case CentralityScenario::rademacher_uniform:
      spec = {CentralityKind::rademacher, 0.0, 0.0, 1.0 / 3.0};
      draw = [&] { return uniform(rng); };
      break;
  }
  spec.validate();

  numerics::RunningMoments moments;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = draw();
    moments.add(std::exp(x - spec.eta(x)));
  }
  return moments.estimate();
}

// ---------------------------------------------------------------------------

namespace {

void validate_coverage_args(std::size_t n, double delta, std::size_t trials) {
  if (n < 3) throw InvalidInput("coverage: n must be >= 3");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("coverage: delta must lie in (0, 1)");
  if (trials == 0) throw InvalidInput("coverage: trials must be >= 1");
}

// Per-predictor deviation P_S Delta(f) = r(f) - P_S loss(f).
std::vector<double> sample_deviations(const FiniteProcessWorld& world, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto counts = world.sample_counts(n, rng);
  std::vector<double> dev(world.predictors());
  for (std::size_t f = 0; f < dev.size(); ++f) dev[f] = world.risk(f) - world.empirical_risk(f, counts);
  return dev;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void record(CoverageReport& report, double slack) {
  ++report.trials;
  if (slack < 0.0) ++report.violations;
  if (report.trials == 1 || slack < report.worst_slack) report.worst_slack = slack;
}

}  // namespace

CoverageReport subgaussian_coverage(const FiniteProcessWorld& world, std::size_t n, double delta,
                                    std::size_t trials, std::uint64_t seed) {
  validate_coverage_args(n, delta, trials);
  const double bound = subgaussian_pac_bound(0.5, -std::log(delta), n);
  CoverageReport report;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto dev = sample_deviations(world, n, numerics::derive_seed(seed, t));
    record(report, bound - mean(dev));
  }
  return report;
}

CoverageReport subgaussian_coverage_posterior_grid(const FiniteProcessWorld& world, std::size_t n,
                                                   double delta, std::size_t trials,
                                                   std::uint64_t seed) {
  validate_coverage_args(n, delta, trials);
  const double log_delta_inv = -std::log(delta);
  const double uniform_bound = subgaussian_pac_bound(0.5, log_delta_inv, n);
  // KL(Dirac_f || uniform over F) = ln |F|
  const double dirac_bound =
      subgaussian_pac_bound(0.5, std::log(static_cast<double>(world.predictors())) + log_delta_inv, n);
  CoverageReport report;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto dev = sample_deviations(world, n, numerics::derive_seed(seed, t));
    double slack = uniform_bound - mean(dev);
    for (double d : dev) slack = std::min(slack, dirac_bound - d);
    record(report, slack);
  }
  return report;
}

CoverageReport abstract_coverage(const FiniteProcessWorld& world, std::size_t n, double delta,
                                 double lambda, std::size_t trials, std::uint64_t seed) {
  validate_coverage_args(n, delta, trials);
  if (!(lambda > 0.0)) throw InvalidInput("abstract_coverage: lambda must be > 0");
  const double eta = centrality_hoeffding(0.0, lambda);  // lambda Delta ranges over an interval of length lambda
  const double rhs = abstract_pac_rhs(eta, -std::log(delta), n);
  CoverageReport report;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto dev = sample_deviations(world, n, numerics::derive_seed(seed, t));
    record(report, rhs - lambda * mean(dev));
  }
  return report;
}

}  // namespace ptb::pac
