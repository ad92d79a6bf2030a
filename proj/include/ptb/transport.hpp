#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ptb/divergences.hpp"
#include "ptb/nn_cert.hpp"
#include "ptb/numerics.hpp"

namespace ptb::transport {

using divergences::DiagonalGaussian;

/// Linear contraction flow mu_t(f) = w_inf - f from N(w0, diag^2 s0).
class ContractionFlow {
 public:
  ContractionFlow(DiagonalGaussian initial, std::vector<double> attractor);

  const DiagonalGaussian& initial() const noexcept { return initial_; }
  const std::vector<double>& attractor() const noexcept { return attractor_; }
  std::size_t dimension() const noexcept { return attractor_.size(); }

  /// |w_inf - w0|^2 + |s0|^2, the squared flow length at t = 0.
  double initial_second_moment() const;

 private:
  DiagonalGaussian initial_;
  std::vector<double> attractor_;
};

struct Snapshot {
  double t;
  DiagonalGaussian posterior;
};

Snapshot snapshot(const ContractionFlow& flow, double t);

/// W_t, V_t and L_Delta; construction enforces 0 <= V <= L W.
class VelocityPair {
 public:
  VelocityPair(double wasserstein, double deviation_based, double lipschitz);

  double wasserstein() const noexcept { return wasserstein_; }
  double deviation_based() const noexcept { return deviation_based_; }
  double lipschitz() const noexcept { return lipschitz_; }
  VelocityPair scaled(double factor) const;

 private:
  double wasserstein_;
  double deviation_based_;
  double lipschitz_;
};

/// Layerwise metric of the network setting: the flow vectors are K m x m
/// layers and the velocity is the contraction-lemma bound.
struct LayerwiseMetric {
  std::size_t depth = 1;
  std::size_t width = 1;
  double lipschitz_loss = 1.0;
  double input_radius = 1.0;
  nn::ContractionMode mode = nn::ContractionMode::lemma;
};

/// Identity metric when `layerwise` is empty.
double wasserstein_velocity(const ContractionFlow& flow, double t,
                            const std::optional<LayerwiseMetric>& layerwise = std::nullopt);

using Observation = std::vector<double>;

/// Data distribution and loss with a gradient oracle. Synthetic problems also
/// provide exact population quantities.
class EmpiricalProblem {
 public:
  virtual ~EmpiricalProblem() = default;

  virtual std::size_t parameter_dimension() const = 0;
  /// L_Delta: sup over f, z of |<v, grad Delta(f, z)>| / |v|.
  virtual double lipschitz_deviation() const = 0;
  virtual std::vector<Observation> sample(std::size_t n, std::mt19937_64& rng) const = 0;
  virtual double loss(const std::vector<double>& f, const Observation& z) const = 0;
  virtual std::vector<double> loss_gradient(const std::vector<double>& f, const Observation& z) const = 0;

  virtual bool is_synthetic() const { return false; }
  /// r(f); synthetic problems only.
  virtual double risk(const std::vector<double>& f) const;
  /// grad r(f); synthetic problems only.
  virtual std::vector<double> risk_gradient(const std::vector<double>& f) const;
  /// P <v, grad Delta(f, .)>^2; synthetic problems only.
  virtual double population_pairing_second_moment(const std::vector<double>& f,
                                                  const std::vector<double>& v) const;
};

/// l(f, z) = (z - f)^2 / 2 with z ~ U[-1, 1]: r(f) = (f^2 + 1/3) / 2,
/// grad Delta(f, z) = z - E z, L_Delta = 1.
class SquaredLossWorld final : public EmpiricalProblem {
 public:
  std::size_t parameter_dimension() const override { return 1; }
  double lipschitz_deviation() const override { return 1.0; }
  std::vector<Observation> sample(std::size_t n, std::mt19937_64& rng) const override;
  double loss(const std::vector<double>& f, const Observation& z) const override;
  std::vector<double> loss_gradient(const std::vector<double>& f, const Observation& z) const override;

  bool is_synthetic() const override { return true; }
  double risk(const std::vector<double>& f) const override;
  std::vector<double> risk_gradient(const std::vector<double>& f) const override;
  double population_pairing_second_moment(const std::vector<double>& f,
                                          const std::vector<double>& v) const override;

  /// Closed-form V_t for a flow in this world given the sample.
  static double deviation_velocity_exact(const ContractionFlow& flow, double t,
                                         const std::vector<Observation>& sample);
  /// Mean of z over the sample.
  static double sample_mean(const std::vector<Observation>& sample);
};

struct DeviationVelocity {
  enum class Kind { monte_carlo, worst_case };
  Kind kind = Kind::monte_carlo;
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo estimate of V_t over f ~ Q_t. The population half uses exact
/// moments when the world is synthetic, otherwise `held_out`. A null world
/// returns the worst-case value L_Delta W_t, tagged as such.
DeviationVelocity deviation_velocity(const ContractionFlow& flow, double t, const EmpiricalProblem* world,
                                     const std::vector<Observation>& sample,
                                     const std::vector<Observation>& held_out, std::size_t mc_samples,
                                     std::uint64_t seed, double worst_case_lipschitz = 1.0);

struct IncrementBound {
  double chaining = 0.0;   // 2 V sqrt((H + c(n)) / n)
  double transport = 0.0;  // 2 L W / sqrt(n)
  double total = 0.0;
};

/// Theorem-level increment bound; `c_scale` multiplies c(n) (1 in normal use).
IncrementBound increment_bound(const VelocityPair& v, double h_delta, std::uint64_t n, double c_scale = 1.0);

/// t_k = -ln(1 - (k / K)(1 - e^{-t_max})), k = 0..K.
std::vector<double> time_grid(double t_max, std::size_t steps);

enum class SumRule { right_endpoint, left_endpoint, trapezoid };

const char* rule_name(SumRule rule);

struct GridPoint {
  double t;
  double chaining;
  double transport;
  double iota;
};

struct BoundBreakdown {
  double chaining_cost = 0.0;
  double transport_cost = 0.0;
  double reference_deviation = 0.0;
  double total = 0.0;
  std::vector<GridPoint> grid;  // includes t_0 = 0
  SumRule rule = SumRule::right_endpoint;
  bool monotone = true;         // iota nonincreasing along the grid
  double tail_estimate = 0.0;   // iota(t_max), the e^{-t} tail beyond t_max
  double rule_spread = 0.0;     // |trapezoid - chosen rule|, a discretization gauge
};

struct IncrementInputs {
  VelocityPair velocities;
  double h_delta;
};

struct OtOptions {
  SumRule rule = SumRule::right_endpoint;
  bool allow_non_monotone = false;
  double c_scale = 1.0;
};

/// Discretized time integral of the increment bound along a flow, with the
/// flow's per-time inputs supplied by `inputs_at`. Throws ValidationError
/// when iota is not nonincreasing and `allow_non_monotone` is off.
BoundBreakdown ot_distance_upper(double t_max, std::size_t steps, std::uint64_t n,
                                 const std::function<IncrementInputs(double)>& inputs_at,
                                 const OtOptions& options = {});

double corollary1_assemble(double emp_risk, double ot_upper, double reference_dev);

/// sigma sqrt(ln(2 / delta) / n)
double reference_deviation(double sigma, double delta, std::uint64_t n);

/// Perturbations applied to the increment bound in canary runs.
struct BoundMutation {
  double c_scale = 1.0;
  double h_scale = 1.0;
  double transport_scale = 1.0;
};

struct Theorem1Report {
  std::size_t trials = 0;
  std::size_t violating_trials = 0;
  double min_slack_ratio = 0.0;  // min over trials and grid of (iota - lhs) / iota
  double max_lhs_over_iota = 0.0;
  double finite_difference_error = 0.0;  // max relative gap at the cross-check points
  double fraction() const noexcept {
    return trials == 0 ? 0.0 : static_cast<double>(violating_trials) / static_cast<double>(trials);
  }
};

/// Draws `trials` samples S of size n from the squared-loss world and checks
/// d/dt D_t <= iota_t at every grid time, with the prior U = Q_0.
Theorem1Report empirical_theorem1_check(const SquaredLossWorld& world, const ContractionFlow& flow,
                                        const std::vector<double>& grid, std::size_t n, std::size_t trials,
                                        double delta, std::uint64_t seed, const BoundMutation& mutation = {});

/// H_delta(Q_t, Q_0) for the contraction flow.
double contraction_complexity(const ContractionFlow& flow, double t, double delta);

}  // namespace ptb::transport
