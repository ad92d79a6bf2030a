#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ptb/numerics.hpp"

namespace ptb::nn {

using numerics::Matrix;

/// K square m x m layers of f_w(x) = W_K a_K(... W_1 a_1(x)), together with
/// the loss Lipschitz constant and the input radius.
struct NetworkWeights {
  std::vector<Matrix> layers;
  double lipschitz_loss = 1.0;
  double input_radius = 1.0;

  /// Throws InvalidInput unless K >= 1, layers square and equal-sized,
  /// entries finite, L and R_X positive.
  void validate() const;

  std::size_t depth() const noexcept { return layers.size(); }
  std::size_t width() const noexcept { return layers.empty() ? 0 : layers.front().rows(); }
  /// d = m^2 K
  std::size_t dimension() const noexcept { return depth() * width() * width(); }

  /// Parameter vector, layer-major then row-major.
  std::vector<double> flatten() const;
  /// Inverse of flatten() for a template with the same shape.
  static NetworkWeights unflatten(std::span<const double> flat, std::size_t depth, std::size_t width,
                                  double lipschitz_loss, double input_radius);
  static NetworkWeights identity(std::size_t depth, std::size_t width, double lipschitz_loss = 1.0,
                                 double input_radius = 1.0);
};

struct SpectralStats {
  std::vector<double> lambda_k;  // per-layer spectral norms
  std::vector<double> frob_k;    // per-layer Frobenius norms
  double lambda_bar = 0.0;       // (prod lambda_k)^{1/K}
  double log_lambda_bar = 0.0;
  double total_radius = 0.0;     // L R_X lambda_bar^K
  double log_total_radius = 0.0;
  double frob_norm = 0.0;        // sqrt(sum_k frob_k^2)
  std::size_t depth = 0;
  std::size_t width = 0;
  double lipschitz_loss = 1.0;
  double input_radius = 1.0;
  bool degenerate = false;       // some lambda_k == 0

  std::size_t dimension() const noexcept { return depth * width * width; }
};

SpectralStats spectral_stats(const NetworkWeights& w, double tol = 1e-12,
                             std::uint64_t seed = numerics::kDefaultSeed);

/// Rescales each layer by lambda_bar / lambda_k. For positively homogeneous
/// activations the network function is unchanged.
NetworkWeights rebalance(const NetworkWeights& w, double tol = 1e-12,
                         std::uint64_t seed = numerics::kDefaultSeed);

/// Per-layer scalars lambda_k^2 / (4 K R^2) of the layerwise metric field.
std::vector<double> sigma_field_layerwise(const SpectralStats& stats);

/// 2 R sqrt(K sum_k phi_k(v)^2 / lambda_k^2)
double norm_bound_sigma_inv(const SpectralStats& stats, const NetworkWeights& v);
/// |v| in the inverse of the layerwise metric, computed from the metric scalars.
double sigma_inv_norm_direct(const SpectralStats& stats, const NetworkWeights& v);
/// 2 R sqrt(K sum_k lambda_k(v)^2 / lambda_k^2)
double norm_bound_lambda(const SpectralStats& stats, std::span<const double> v_spectral);

/// ||M||_2 + gamma_m sqrt(v), v the largest row or column sum of `variances`.
double gaussian_spectral_bound(const Matrix& mean, const Matrix& variances);

/// Largest row l2 norm and largest column l2 norm, whichever is bigger.
double psi_norm(const Matrix& s);
/// sqrt(sum_i max_j s_ij^2)
double phi_inf2_norm(const Matrix& s);

enum class ContractionMode {
  lemma,     // the stated bound with the inflated radii lambda_bar_{t,k}
  envelope,  // R(w_t) exp(sum_k gamma psi_k / lambda_k(w_t)) in place of R_bar_t
};

struct ContractionBounds {
  double sigma_inv_bound = 0.0;  // Wasserstein velocity bound
  double lambda_bound = 0.0;     // deviation velocity bound
  std::vector<double> lambda_bar_t;
  double radius_factor = 0.0;    // R_bar_t (lemma) or its exponential envelope
};

/// Velocity bounds for the contraction flow from N(w0, diag^2 s0) toward
/// w_inf, at time t. `s0` holds per-entry standard deviations.
ContractionBounds l2_contraction_bounds(const NetworkWeights& w0, const NetworkWeights& w_inf,
                                        const NetworkWeights& s0, double t,
                                        ContractionMode mode = ContractionMode::lemma,
                                        double tol = 1e-12);

enum class DerandMode { theorem2, appendix_tight };

const char* mode_name(DerandMode mode);
DerandMode parse_derand_mode(const std::string& name);

struct DerandCertificate {
  double derand_cost = 0.0;
  double entropy_term = 0.0;    // the I-integral term
  double transport_term = 0.0;  // rho sqrt(m) part
  double log_term = 0.0;        // the c_1 / c_2 part
  double rho = 0.0;
  std::uint64_t n = 0;
  double delta = 0.0;
  DerandMode mode = DerandMode::theorem2;
  double c1 = 0.0;
  double c2 = 0.0;
  double rho0 = 0.0;
  SpectralStats stats;
};

struct CertOptions {
  bool rebalance = true;
  double spectral_tol = 1e-12;
  std::uint64_t seed = numerics::kDefaultSeed;
  numerics::QuadratureSpec quad{};
  double rho = 1.0;  // noise level of the stochastic predictor in risk_certificate
};

/// Stddev of N(w, rho): rho L_bar / (sqrt(m) K gamma_m).
double stochastic_predictor_stddev(const SpectralStats& stats, double rho);

DerandCertificate derand_cost(const NetworkWeights& w, double rho, std::uint64_t n, double delta,
                              DerandMode mode = DerandMode::theorem2, const CertOptions& options = {});
/// Same, from precomputed (balanced) statistics.
DerandCertificate derand_cost(const SpectralStats& stats, double rho, std::uint64_t n, double delta,
                              DerandMode mode, const numerics::QuadratureSpec& quad = {});

struct RiskCertificate {
  double emp_risk = 0.0;
  DerandCertificate derand;
  double kl = 0.0;              // KL bound of N(w, 1) against the Cauchy prior
  double h_delta = 0.0;
  double reference_deviation = 0.0;
  double total = 0.0;
  double delta = 0.0;
  double delta_derand = 0.0;
  double delta_reference = 0.0;
  double vc_baseline = 0.0;
  bool below_vc_baseline = false;
  std::vector<std::string> warnings;

  double gap() const noexcept { return total - emp_risk; }
};

RiskCertificate risk_certificate(const NetworkWeights& w, std::uint64_t n, double delta, double emp_risk,
                                 DerandMode mode = DerandMode::theorem2, const CertOptions& options = {});

/// sqrt(d K / n)
double vc_baseline(std::size_t d, std::size_t K, std::uint64_t n);

}  // namespace ptb::nn
