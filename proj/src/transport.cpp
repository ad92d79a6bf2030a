#include "ptb/transport.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ptb/errors.hpp"

namespace ptb::transport {

namespace {

void require_time(double t, const char* where) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidInput(std::string(where) + ": t must be finite and >= 0");
}

}  // namespace

// ---------------------------------------------------------------------------
// Flows and snapshots

ContractionFlow::ContractionFlow(DiagonalGaussian initial, std::vector<double> attractor)
    : initial_(std::move(initial)), attractor_(std::move(attractor)) {
  if (attractor_.size() != initial_.dimension()) throw InvalidInput("ContractionFlow: dimension mismatch");
  for (double x : attractor_) {
    if (!std::isfinite(x)) throw InvalidInput("ContractionFlow: non-finite attractor");
  }
}

double ContractionFlow::initial_second_moment() const {
  double s = 0.0;
  for (std::size_t i = 0; i < dimension(); ++i) {
    const double shift = attractor_[i] - initial_.mean()[i];
    s += shift * shift + initial_.stddev()[i] * initial_.stddev()[i];
  }
  return s;
}

Snapshot snapshot(const ContractionFlow& flow, double t) {
  require_time(t, "snapshot");
  const double decay = std::exp(-t);
  std::vector<double> mean(flow.dimension());
  std::vector<double> stddev(flow.dimension());
  for (std::size_t i = 0; i < flow.dimension(); ++i) {
    mean[i] = flow.attractor()[i] + decay * (flow.initial().mean()[i] - flow.attractor()[i]);
    stddev[i] = decay * flow.initial().stddev()[i];
  }
  return {t, DiagonalGaussian(std::move(mean), std::move(stddev))};
}

double contraction_complexity(const ContractionFlow& flow, double t, double delta) {
  require_time(t, "contraction_complexity");
  const double decay = std::exp(-t);
  double kl = 0.0;
  for (std::size_t i = 0; i < flow.dimension(); ++i) {
    const double s0 = flow.initial().stddev()[i];
    const double move = (1.0 - decay) * (flow.attractor()[i] - flow.initial().mean()[i]);
    if (s0 == 0.0) {
      if (move != 0.0) return numerics::kInf;  // Dirac moved off a Dirac prior
      continue;
    }
    const double shift = move / s0;
    // KL(N(m + move, (e^{-t} s0)^2) || N(m, s0^2)) per coordinate
    kl += 0.5 * (decay * decay + shift * shift - 1.0) + t;
  }
  return divergences::complexity_H(std::max(kl, 0.0), delta).h_delta;
}

// ---------------------------------------------------------------------------
// Velocities

VelocityPair::VelocityPair(double wasserstein, double deviation_based, double lipschitz)
    : wasserstein_(wasserstein), deviation_based_(deviation_based), lipschitz_(lipschitz) {
  if (!(wasserstein >= 0.0) || !(deviation_based >= 0.0) || !(lipschitz >= 0.0)) {
    throw InvalidInput("VelocityPair: velocities and Lipschitz constant must be >= 0");
  }
  const double cap = lipschitz * wasserstein;
  if (deviation_based > cap * (1.0 + 1e-12)) {
    throw InvalidInput("VelocityPair: deviation velocity exceeds L * wasserstein velocity");
  }
}

VelocityPair VelocityPair::scaled(double factor) const {
  return VelocityPair(wasserstein_ * factor, deviation_based_ * factor, lipschitz_);
}

double wasserstein_velocity(const ContractionFlow& flow, double t, const std::optional<LayerwiseMetric>& layerwise) {
  require_time(t, "wasserstein_velocity");
  if (!layerwise) return std::exp(-t) * std::sqrt(flow.initial_second_moment());

  const LayerwiseMetric& metric = *layerwise;
  if (flow.dimension() != metric.depth * metric.width * metric.width) {
    throw InvalidInput("wasserstein_velocity: flow dimension does not match the layerwise metric shape");
  }
  auto as_net = [&](const std::vector<double>& flat) {
    return nn::NetworkWeights::unflatten(flat, metric.depth, metric.width, metric.lipschitz_loss,
                                         metric.input_radius);
  };
  return nn::l2_contraction_bounds(as_net(flow.initial().mean()), as_net(flow.attractor()),
                                   as_net(flow.initial().stddev()), t, metric.mode)
      .sigma_inv_bound;
}

double EmpiricalProblem::risk(const std::vector<double>&) const {
  throw InvalidInput("EmpiricalProblem: no closed-form risk for this world");
}

std::vector<double> EmpiricalProblem::risk_gradient(const std::vector<double>&) const {
  throw InvalidInput("EmpiricalProblem: no closed-form risk gradient for this world");
}

double EmpiricalProblem::population_pairing_second_moment(const std::vector<double>&,
                                                          const std::vector<double>&) const {
  throw InvalidInput("EmpiricalProblem: no closed-form population moments for this world");
}

std::vector<Observation> SquaredLossWorld::sample(std::size_t n, std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::vector<Observation> out(n);
  for (auto& z : out) z = {uniform(rng)};
  return out;
}

double SquaredLossWorld::loss(const std::vector<double>& f, const Observation& z) const {
  const double r = z.at(0) - f.at(0);
  return 0.5 * r * r;
}

std::vector<double> SquaredLossWorld::loss_gradient(const std::vector<double>& f, const Observation& z) const {
  return {f.at(0) - z.at(0)};
}

double SquaredLossWorld::risk(const std::vector<double>& f) const {
  return 0.5 * (f.at(0) * f.at(0) + 1.0 / 3.0);
}

std::vector<double> SquaredLossWorld::risk_gradient(const std::vector<double>& f) const { return {f.at(0)}; }

double SquaredLossWorld::population_pairing_second_moment(const std::vector<double>&,
                                                          const std::vector<double>& v) const {
  return v.at(0) * v.at(0) / 3.0;  // Var z = 1/3
}

double SquaredLossWorld::sample_mean(const std::vector<Observation>& sample) {
  if (sample.empty()) throw InvalidInput("SquaredLossWorld: empty sample");
  double s = 0.0;
  for (const auto& z : sample) s += z.at(0);
  return s / static_cast<double>(sample.size());
}

double SquaredLossWorld::deviation_velocity_exact(const ContractionFlow& flow, double t,
                                                  const std::vector<Observation>& sample) {
  require_time(t, "deviation_velocity_exact");
  if (flow.dimension() != 1) throw InvalidInput("SquaredLossWorld: flow must be one-dimensional");
  if (sample.empty()) throw InvalidInput("SquaredLossWorld: empty sample");
  double mean_sq = 0.0;
  for (const auto& z : sample) mean_sq += z.at(0) * z.at(0);
  mean_sq /= static_cast<double>(sample.size());
  return std::exp(-t) * std::sqrt(flow.initial_second_moment()) * std::sqrt(0.5 * (1.0 / 3.0 + mean_sq));
}

DeviationVelocity deviation_velocity(const ContractionFlow& flow, double t, const EmpiricalProblem* world,
                                     const std::vector<Observation>& sample,
                                     const std::vector<Observation>& held_out, std::size_t mc_samples,
                                     std::uint64_t seed, double worst_case_lipschitz) {
  require_time(t, "deviation_velocity");
  if (world == nullptr) {
    return {DeviationVelocity::Kind::worst_case, worst_case_lipschitz * wasserstein_velocity(flow, t), 0.0};
  }
  if (mc_samples == 0) throw InvalidInput("deviation_velocity: mc_samples must be >= 1");
  if (sample.empty()) throw InvalidInput("deviation_velocity: empty sample");
  if (world->parameter_dimension() != flow.dimension()) throw InvalidInput("deviation_velocity: dimension mismatch");
  const bool synthetic = world->is_synthetic();
  if (!synthetic && held_out.empty()) {
    throw InvalidInput("deviation_velocity: a held-out sample is required for non-synthetic worlds");
  }

  const Snapshot snap = snapshot(flow, t);
  const std::size_t d = flow.dimension();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  numerics::RunningMoments moments;
  std::vector<double> f(d), mu(d);
  for (std::size_t s = 0; s < mc_samples; ++s) {
    for (std::size_t i = 0; i < d; ++i) {
      f[i] = snap.posterior.mean()[i] + snap.posterior.stddev()[i] * normal(rng);
      mu[i] = flow.attractor()[i] - f[i];
    }
    std::vector<double> risk_grad;
    if (synthetic) {
      risk_grad = world->risk_gradient(f);
    } else {
      risk_grad.assign(d, 0.0);
      for (const auto& z : held_out) {
        const auto g = world->loss_gradient(f, z);
        for (std::size_t i = 0; i < d; ++i) risk_grad[i] += g[i];
      }
      for (double& x : risk_grad) x /= static_cast<double>(held_out.size());
    }
    auto pairing_sq = [&](const std::vector<Observation>& data) {
      double acc = 0.0;
      for (const auto& z : data) {
        const auto g = world->loss_gradient(f, z);
        double p = 0.0;
        for (std::size_t i = 0; i < d; ++i) p += mu[i] * (risk_grad[i] - g[i]);
        acc += p * p;
      }
      return acc / static_cast<double>(data.size());
    };
    const double population = synthetic ? world->population_pairing_second_moment(f, mu) : pairing_sq(held_out);
    moments.add(0.5 * (population + pairing_sq(sample)));
  }

  const auto est = moments.estimate();
  const double v = std::sqrt(std::max(est.mean, 0.0));
  const double se = v > 0.0 ? est.std_error / (2.0 * v) : 0.0;
  return {DeviationVelocity::Kind::monte_carlo, v, se};
}

// ---------------------------------------------------------------------------
// Increment bound and its time integral

IncrementBound increment_bound(const VelocityPair& v, double h_delta, std::uint64_t n, double c_scale) {
  if (n == 0) throw InvalidInput("increment_bound: n must be >= 1");
  if (!(h_delta >= 0.0)) throw InvalidInput("increment_bound: h_delta must be >= 0");
  if (!(c_scale >= 0.0)) throw InvalidInput("increment_bound: c_scale must be >= 0");
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  IncrementBound out;
  if (v.deviation_based() > 0.0) {
    out.chaining = 2.0 * v.deviation_based() * std::sqrt(h_delta + c_scale * numerics::c_of_n(n)) / sqrt_n;
  }
  out.transport = 2.0 * v.lipschitz() * v.wasserstein() / sqrt_n;
  out.total = out.chaining + out.transport;
  return out;
}

std::vector<double> time_grid(double t_max, std::size_t steps) {
  if (steps == 0) throw InvalidInput("time_grid: steps must be >= 1");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InvalidInput("time_grid: t_max must be finite and > 0");
  const double span = -std::expm1(-t_max);  // 1 - e^{-t_max}
  std::vector<double> grid(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(steps);
    grid[k] = -std::log1p(-frac * span);
  }
  grid.back() = t_max;
  return grid;
}

const char* rule_name(SumRule rule) {
  switch (rule) {
    case SumRule::right_endpoint: return "right_endpoint";
    case SumRule::left_endpoint: return "left_endpoint";
    case SumRule::trapezoid: return "trapezoid";
  }
  return "unknown";
}

BoundBreakdown ot_distance_upper(double t_max, std::size_t steps, std::uint64_t n,
                                 const std::function<IncrementInputs(double)>& inputs_at, const OtOptions& options) {
  const std::vector<double> grid = time_grid(t_max, steps);
  BoundBreakdown out;
  out.rule = options.rule;
  for (double t : grid) {
    const IncrementInputs in = inputs_at(t);
    const IncrementBound b = increment_bound(in.velocities, in.h_delta, n, options.c_scale);
    out.grid.push_back({t, b.chaining, b.transport, b.total});
  }

  for (std::size_t k = 1; k < out.grid.size(); ++k) {
    const double prev = out.grid[k - 1].iota;
    if (out.grid[k].iota > prev * (1.0 + 1e-12) + 1e-300) out.monotone = false;
  }
  if (!out.monotone && !options.allow_non_monotone) {
    throw ValidationError("ot_distance_upper: increment bound is not nonincreasing along the grid");
  }

  auto sum_with = [&](SumRule rule, auto member) {
    double acc = 0.0;
    for (std::size_t k = 1; k < out.grid.size(); ++k) {
      const double h = out.grid[k].t - out.grid[k - 1].t;
      const double left = out.grid[k - 1].*member;
      const double right = out.grid[k].*member;
      switch (rule) {
        case SumRule::right_endpoint: acc += h * right; break;
        case SumRule::left_endpoint: acc += h * left; break;
        case SumRule::trapezoid: acc += 0.5 * h * (left + right); break;
      }
    }
    return acc;
  };
  out.chaining_cost = sum_with(options.rule, &GridPoint::chaining);
  out.transport_cost = sum_with(options.rule, &GridPoint::transport);
  out.total = out.chaining_cost + out.transport_cost;
  out.tail_estimate = out.grid.back().iota;
  out.rule_spread = std::abs(sum_with(SumRule::trapezoid, &GridPoint::iota) - out.total);
  return out;
}

double corollary1_assemble(double emp_risk, double ot_upper, double reference_dev) {
  if (!(ot_upper >= 0.0)) throw InvalidInput("corollary1_assemble: OT term must be >= 0");
  return emp_risk + ot_upper + reference_dev;
}

double reference_deviation(double sigma, double delta, std::uint64_t n) {
  if (!(sigma > 0.0)) throw InvalidInput("reference_deviation: sigma must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("reference_deviation: delta must lie in (0, 1)");
  if (n == 0) throw InvalidInput("reference_deviation: n must be >= 1");
  return sigma * std::sqrt(std::log(2.0 / delta) / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Coverage of the increment bound

namespace {

// Q_t P_S Delta for the squared-loss world, from first principles.
double expected_deviation(const Snapshot& snap, const std::vector<Observation>& sample) {
  const double m = snap.posterior.mean()[0];
  const double s = snap.posterior.stddev()[0];
  const double risk = 0.5 * (m * m + s * s + 1.0 / 3.0);
  double emp = 0.0;
  for (const auto& z : sample) {
    const double r = z[0] - m;
    emp += 0.5 * (r * r + s * s);
  }
  return risk - emp / static_cast<double>(sample.size());
}

}  // namespace

Theorem1Report empirical_theorem1_check(const SquaredLossWorld& world, const ContractionFlow& flow,
                                        const std::vector<double>& grid, std::size_t n, std::size_t trials,
                                        double delta, std::uint64_t seed, const BoundMutation& mutation) {
  if (flow.dimension() != 1) throw InvalidInput("empirical_theorem1_check: flow must be one-dimensional");
  if (grid.empty()) throw InvalidInput("empirical_theorem1_check: empty time grid");
  if (n == 0 || trials == 0) throw InvalidInput("empirical_theorem1_check: n and trials must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("empirical_theorem1_check: delta must lie in (0, 1)");

  const double shift = flow.attractor()[0] - flow.initial().mean()[0];
  const double lipschitz = world.lipschitz_deviation();

  // Sample-independent parts of iota on the grid.
  std::vector<double> w_t(grid.size()), h_t(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    w_t[j] = wasserstein_velocity(flow, grid[j]);
    const bool moves = flow.initial_second_moment() > 0.0;
    h_t[j] = moves ? mutation.h_scale * contraction_complexity(flow, grid[j], delta) : 0.0;
  }

  Theorem1Report report;
  report.trials = trials;
  report.min_slack_ratio = numerics::kInf;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(numerics::derive_seed(seed, trial));
    const auto sample = world.sample(n, rng);
    const double z_bar = SquaredLossWorld::sample_mean(sample);
    bool violated = false;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double t = grid[j];
      const double lhs = std::exp(-t) * shift * z_bar;
      const double v = SquaredLossWorld::deviation_velocity_exact(flow, t, sample);
      const VelocityPair vel(w_t[j], v, lipschitz);
      IncrementBound b = increment_bound(vel, h_t[j], n, mutation.c_scale);
      const double iota = b.chaining + mutation.transport_scale * b.transport;
      if (lhs > iota) violated = true;
      if (iota > 0.0) {
        report.min_slack_ratio = std::min(report.min_slack_ratio, (iota - lhs) / iota);
        report.max_lhs_over_iota = std::max(report.max_lhs_over_iota, lhs / iota);
      }
    }
    if (violated) ++report.violating_trials;

    if (trial == 0) {
      // Finite-difference cross-check of the analytic derivative.
      const std::size_t picks[3] = {0, grid.size() / 2, grid.size() - 1};
      for (std::size_t j : picks) {
        // h near cbrt(eps) balances truncation against cancellation in D_t,
        // which matters at large t where the derivative is ~e^{-t}.
        const double h = 1e-4;
        const double t = std::max(grid[j], 2.0 * h);
        const double fd = (expected_deviation(snapshot(flow, t + h), sample) -
                           expected_deviation(snapshot(flow, t - h), sample)) /
                          (2.0 * h);
        const double exact = std::exp(-t) * shift * z_bar;
        const double scale = std::max(std::abs(exact), 1e-12);
        report.finite_difference_error = std::max(report.finite_difference_error, std::abs(fd - exact) / scale);
      }
    }
  }
  if (!std::isfinite(report.min_slack_ratio)) report.min_slack_ratio = 0.0;
  return report;
}

}  // namespace ptb::transport
