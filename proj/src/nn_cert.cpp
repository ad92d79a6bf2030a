#include "ptb/nn_cert.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ptb/divergences.hpp"
#include "ptb/errors.hpp"
#include "ptb/pac_core.hpp"

namespace ptb::nn {

namespace {

void require_same_shape(const NetworkWeights& a, const NetworkWeights& b, const char* where) {
  if (a.depth() != b.depth() || a.width() != b.width()) {
    throw InvalidInput(std::string(where) + ": network shapes differ");
  }
}

void require_nondegenerate(const SpectralStats& stats, const char* where) {
  if (stats.degenerate || !(stats.total_radius > 0.0)) {
    throw InvalidInput(std::string(where) + ": degenerate network (a layer has zero spectral norm)");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// NetworkWeights

void NetworkWeights::validate() const {
  if (layers.empty()) throw InvalidInput("NetworkWeights: need at least one layer");
  const std::size_t m = layers.front().rows();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const Matrix& W = layers[k];
    if (W.rows() != m || W.cols() != m) {
      throw InvalidInput("NetworkWeights: layer " + std::to_string(k) + " is not " + std::to_string(m) + "x" +
                         std::to_string(m));
    }
    if (!W.all_finite()) throw InvalidInput("NetworkWeights: layer " + std::to_string(k) + " has non-finite entries");
  }
  if (!(lipschitz_loss > 0.0) || !std::isfinite(lipschitz_loss)) {
    throw InvalidInput("NetworkWeights: lipschitz_loss must be positive and finite");
  }
  if (!(input_radius > 0.0) || !std::isfinite(input_radius)) {
    throw InvalidInput("NetworkWeights: input_radius must be positive and finite");
  }
}

std::vector<double> NetworkWeights::flatten() const {
  std::vector<double> flat;
  flat.reserve(dimension());
  for (const Matrix& W : layers) flat.insert(flat.end(), W.entries().begin(), W.entries().end());
  return flat;
}

NetworkWeights NetworkWeights::unflatten(std::span<const double> flat, std::size_t depth, std::size_t width,
                                         double lipschitz_loss, double input_radius) {
  if (flat.size() != depth * width * width) throw InvalidInput("NetworkWeights::unflatten: size mismatch");
  NetworkWeights w;
  w.lipschitz_loss = lipschitz_loss;
  w.input_radius = input_radius;
  const std::size_t block = width * width;
  for (std::size_t k = 0; k < depth; ++k) {
    const auto part = flat.subspan(k * block, block);
    w.layers.emplace_back(width, width, std::vector<double>(part.begin(), part.end()));
  }
  return w;
}

NetworkWeights NetworkWeights::identity(std::size_t depth, std::size_t width, double lipschitz_loss,
                                        double input_radius) {
  NetworkWeights w;
  w.layers.assign(depth, Matrix::identity(width));
  w.lipschitz_loss = lipschitz_loss;
  w.input_radius = input_radius;
  w.validate();
  return w;
}

// ---------------------------------------------------------------------------
// Spectral statistics

SpectralStats spectral_stats(const NetworkWeights& w, double tol, std::uint64_t seed) {
  w.validate();
  SpectralStats s;
  s.depth = w.depth();
  s.width = w.width();
  s.lipschitz_loss = w.lipschitz_loss;
  s.input_radius = w.input_radius;
  double frob_sq = 0.0;
  for (std::size_t k = 0; k < w.depth(); ++k) {
    s.lambda_k.push_back(numerics::spectral_norm(w.layers[k], tol, numerics::derive_seed(seed, k)));
    s.frob_k.push_back(numerics::frobenius_norm(w.layers[k]));
    frob_sq += s.frob_k.back() * s.frob_k.back();
  }
  s.frob_norm = std::sqrt(frob_sq);

  const double log_prod = numerics::log_product(s.lambda_k);
  const double K = static_cast<double>(s.depth);
  s.degenerate = std::isinf(log_prod);
  s.log_lambda_bar = log_prod / K;
  s.lambda_bar = std::exp(s.log_lambda_bar);
  s.log_total_radius = std::log(w.lipschitz_loss) + std::log(w.input_radius) + log_prod;
  s.total_radius = std::exp(s.log_total_radius);
  return s;
}

NetworkWeights rebalance(const NetworkWeights& w, double tol, std::uint64_t seed) {
  const SpectralStats s = spectral_stats(w, tol, seed);
  if (s.degenerate) throw InvalidInput("rebalance: degenerate network (a layer has zero spectral norm)");
  NetworkWeights out = w;
  for (std::size_t k = 0; k < w.depth(); ++k) {
    // exp of a log-difference keeps the scale finite for extreme layer norms
    out.layers[k] = w.layers[k].scaled(std::exp(s.log_lambda_bar - std::log(s.lambda_k[k])));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lemma-level norm bounds

std::vector<double> sigma_field_layerwise(const SpectralStats& stats) {
  require_nondegenerate(stats, "sigma_field_layerwise");
  const double K = static_cast<double>(stats.depth);
  std::vector<double> scalars;
  for (double lambda : stats.lambda_k) {
    const double ratio = lambda / stats.total_radius;
    scalars.push_back(ratio * ratio / (4.0 * K));
  }
  return scalars;
}

double norm_bound_sigma_inv(const SpectralStats& stats, const NetworkWeights& v) {
  require_nondegenerate(stats, "norm_bound_sigma_inv");
  if (v.depth() != stats.depth || v.width() != stats.width) throw InvalidInput("norm_bound_sigma_inv: shape mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < stats.depth; ++k) {
    const double r = numerics::frobenius_norm(v.layers[k]) / stats.lambda_k[k];
    acc += r * r;
  }
  return 2.0 * stats.total_radius * std::sqrt(static_cast<double>(stats.depth) * acc);
}

double sigma_inv_norm_direct(const SpectralStats& stats, const NetworkWeights& v) {
  if (v.depth() != stats.depth || v.width() != stats.width) throw InvalidInput("sigma_inv_norm_direct: shape mismatch");
  const std::vector<double> scalars = sigma_field_layerwise(stats);
  double acc = 0.0;
  for (std::size_t k = 0; k < stats.depth; ++k) {
    for (double x : v.layers[k].entries()) acc += x * x / scalars[k];
  }
  return std::sqrt(acc);
}

double norm_bound_lambda(const SpectralStats& stats, std::span<const double> v_spectral) {
  require_nondegenerate(stats, "norm_bound_lambda");
  if (v_spectral.size() != stats.depth) throw InvalidInput("norm_bound_lambda: need one spectral norm per layer");
  double acc = 0.0;
  for (std::size_t k = 0; k < stats.depth; ++k) {
    if (!(v_spectral[k] >= 0.0)) throw InvalidInput("norm_bound_lambda: spectral norms must be >= 0");
    const double r = v_spectral[k] / stats.lambda_k[k];
    acc += r * r;
  }
  return 2.0 * stats.total_radius * std::sqrt(static_cast<double>(stats.depth) * acc);
}

double gaussian_spectral_bound(const Matrix& mean, const Matrix& variances) {
  if (mean.rows() != variances.rows() || mean.cols() != variances.cols()) {
    throw InvalidInput("gaussian_spectral_bound: shape mismatch between mean and variances");
  }
  std::vector<double> row_sum(mean.rows(), 0.0);
  std::vector<double> col_sum(mean.cols(), 0.0);
  for (std::size_t i = 0; i < mean.rows(); ++i) {
    for (std::size_t j = 0; j < mean.cols(); ++j) {
      const double v = variances(i, j);
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("gaussian_spectral_bound: variances must be finite and >= 0");
      row_sum[i] += v;
      col_sum[j] += v;
    }
  }
  const double v = std::max(*std::max_element(row_sum.begin(), row_sum.end()),
                            *std::max_element(col_sum.begin(), col_sum.end()));
  const std::size_t m = std::max(mean.rows(), mean.cols());
  return numerics::spectral_norm(mean) + numerics::gamma_m(m) * std::sqrt(v);
}

double psi_norm(const Matrix& s) {
  return std::max(numerics::group_norm_pq(s, 2.0, numerics::kInf),
                  numerics::group_norm_pq(s.transposed(), 2.0, numerics::kInf));
}

double phi_inf2_norm(const Matrix& s) { return numerics::group_norm_pq(s, numerics::kInf, 2.0); }

ContractionBounds l2_contraction_bounds(const NetworkWeights& w0, const NetworkWeights& w_inf,
                                        const NetworkWeights& s0, double t, ContractionMode mode, double tol) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidInput("l2_contraction_bounds: t must be finite and >= 0");
  w0.validate();
  require_same_shape(w0, w_inf, "l2_contraction_bounds");
  require_same_shape(w0, s0, "l2_contraction_bounds");
  for (const Matrix& S : s0.layers) {
    for (double x : S.entries()) {
      if (!(x >= 0.0)) throw InvalidInput("l2_contraction_bounds: s0 entries must be >= 0");
    }
  }

  const std::size_t K = w0.depth();
  const double decay = std::exp(-t);
  const double gamma = numerics::gamma_m(w0.width());

  NetworkWeights w_t = w_inf;
  for (std::size_t k = 0; k < K; ++k) w_t.layers[k] += (w0.layers[k] - w_inf.layers[k]).scaled(decay);
  const SpectralStats stats_t = spectral_stats(w_t, tol);

  ContractionBounds out;
  std::vector<double> sigma_num(K), lambda_num(K), denom(K);
  double log_radius = std::log(w0.lipschitz_loss) + std::log(w0.input_radius);
  double envelope_exponent = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const Matrix diff = w_inf.layers[k] - w0.layers[k];
    const Matrix& s = s0.layers[k];
    const double phi_diff = numerics::frobenius_norm(diff);
    const double phi_s = numerics::frobenius_norm(s);
    const double lambda_diff = numerics::spectral_norm(diff, tol);
    const double phi_inf2_s = phi_inf2_norm(s);
    const double psi = psi_norm(s);
    sigma_num[k] = phi_diff * phi_diff + phi_s * phi_s;
    lambda_num[k] = lambda_diff * lambda_diff + phi_inf2_s * phi_inf2_s;

    const double lambda_bar = stats_t.lambda_k[k] + decay * gamma * psi;
    out.lambda_bar_t.push_back(lambda_bar);
    if (mode == ContractionMode::lemma) {
      denom[k] = lambda_bar;
      log_radius += std::log(lambda_bar);
    } else {
      denom[k] = stats_t.lambda_k[k];
      envelope_exponent += gamma * psi / stats_t.lambda_k[k];
    }
    if (!(denom[k] > 0.0)) throw InvalidInput("l2_contraction_bounds: degenerate layer radius at layer " + std::to_string(k));
  }
  out.radius_factor =
      mode == ContractionMode::lemma ? std::exp(log_radius) : stats_t.total_radius * std::exp(envelope_exponent);

  double sigma_acc = 0.0;
  double lambda_acc = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    sigma_acc += sigma_num[k] / (denom[k] * denom[k]);
    lambda_acc += lambda_num[k] / (denom[k] * denom[k]);
  }
  const double Kd = static_cast<double>(K);
  out.sigma_inv_bound = 2.0 * decay * out.radius_factor * std::sqrt(Kd * sigma_acc);
  out.lambda_bound = 2.0 * decay * out.radius_factor * std::sqrt(Kd * lambda_acc);
  return out;
}

// ---------------------------------------------------------------------------
// De-randomization cost and the risk certificate

const char* mode_name(DerandMode mode) {
  return mode == DerandMode::theorem2 ? "theorem2" : "appendix_tight";
}

DerandMode parse_derand_mode(const std::string& name) {
  if (name == "theorem2") return DerandMode::theorem2;
  if (name == "appendix_tight") return DerandMode::appendix_tight;
  throw InvalidInput("unknown derand mode '" + name + "' (expected theorem2 or appendix_tight)");
}

double stochastic_predictor_stddev(const SpectralStats& stats, double rho) {
  const double m = static_cast<double>(stats.width);
  const double K = static_cast<double>(stats.depth);
  return rho * stats.lambda_bar / (std::sqrt(m) * K * numerics::gamma_m(stats.width));
}

DerandCertificate derand_cost(const SpectralStats& stats, double rho, std::uint64_t n, double delta,
                              DerandMode mode, const numerics::QuadratureSpec& quad) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidInput("derand_cost: rho must be finite and > 0");
  if (n == 0) throw InvalidInput("derand_cost: n must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("derand_cost: delta must lie in (0, 1)");
  require_nondegenerate(stats, "derand_cost");

  const double m = static_cast<double>(stats.width);
  const double K = static_cast<double>(stats.depth);
  const double d = static_cast<double>(stats.dimension());
  const double nd = static_cast<double>(n);
  const double gamma = numerics::gamma_m(stats.width);

  DerandCertificate cert;
  cert.rho = rho;
  cert.n = n;
  cert.delta = delta;
  cert.mode = mode;
  cert.stats = stats;
  cert.rho0 = std::sqrt(K / m) * gamma / stats.lambda_bar;
  cert.c1 = numerics::c_of_n(n) + 0.5 * std::log(d) - std::log(delta);
  const double u = rho / cert.rho0;
  cert.c2 = cert.c1 + 1.0 + std::log(u + 1.0 / u);

  // e^rho R computed in the log domain; R alone may overflow for deep nets.
  const double scale = std::exp(rho + stats.log_total_radius);
  const double w_norm = stats.frob_norm;
  if (mode == DerandMode::theorem2) {
    const double pre = 4.0 * scale * std::sqrt(m * K * K / nd);
    cert.entropy_term = pre * (w_norm / stats.lambda_bar) *
                        numerics::entropy_integral_I(std::sqrt(m) * rho / (K * gamma), quad);
    cert.transport_term = pre * rho / (K * gamma);
    cert.log_term = pre * rho * std::sqrt(cert.c2 / m) / (K * gamma);
  } else {
    const double pre = 4.0 * scale / (gamma * std::sqrt(nd));
    const double dim_factor = std::sqrt(0.5 * (1.0 + 1.0 / d));
    cert.entropy_term = pre * cert.rho0 * w_norm * std::sqrt(d) * dim_factor *
                        numerics::entropy_integral_I(rho / (cert.rho0 * w_norm), quad);
    cert.transport_term = pre * rho * std::sqrt(m);
    cert.log_term = pre * cert.rho0 * numerics::integral_J(u, cert.c1, quad);
  }
  cert.derand_cost = cert.entropy_term + cert.transport_term + cert.log_term;
  return cert;
}

DerandCertificate derand_cost(const NetworkWeights& w, double rho, std::uint64_t n, double delta, DerandMode mode,
                              const CertOptions& options) {
  const NetworkWeights balanced = options.rebalance ? rebalance(w, options.spectral_tol, options.seed) : w;
  return derand_cost(spectral_stats(balanced, options.spectral_tol, options.seed), rho, n, delta, mode,
                     options.quad);
}

RiskCertificate risk_certificate(const NetworkWeights& w, std::uint64_t n, double delta, double emp_risk,
                                 DerandMode mode, const CertOptions& options) {
  if (n < 3) throw InvalidInput("risk_certificate: n must be >= 3");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("risk_certificate: delta must lie in (0, 1)");
  if (!std::isfinite(emp_risk)) throw InvalidInput("risk_certificate: emp_risk must be finite");
  if (!(options.rho > 0.0)) throw InvalidInput("risk_certificate: rho must be > 0");

  RiskCertificate cert;
  if (!options.rebalance) {
    cert.warnings.push_back("rebalancing disabled: layer norms used as given; the balanced-layer assumption may not hold");
  }
  const NetworkWeights balanced = options.rebalance ? rebalance(w, options.spectral_tol, options.seed) : w;
  const SpectralStats stats = spectral_stats(balanced, options.spectral_tol, options.seed);

  cert.emp_risk = emp_risk;
  cert.delta = delta;
  cert.delta_derand = 0.5 * delta;
  cert.delta_reference = 0.5 * delta;
  cert.derand = derand_cost(stats, options.rho, n, cert.delta_derand, mode, options.quad);

  const double sigma = stochastic_predictor_stddev(stats, options.rho);
  cert.kl = divergences::kl_gaussian_cauchy_bound(stats.frob_norm * stats.frob_norm, stats.dimension(), sigma,
                                                  divergences::CauchyBoundMode::quadratic);
  cert.h_delta = divergences::complexity_H(cert.kl, cert.delta_reference).h_delta;
  cert.reference_deviation = pac::subgaussian_pac_bound(0.5, cert.h_delta, n);
  cert.total = emp_risk + cert.derand.derand_cost + cert.reference_deviation;

  cert.vc_baseline = vc_baseline(stats.dimension(), stats.depth, n);
  cert.below_vc_baseline = cert.gap() < cert.vc_baseline;
  if (cert.total > 1.0) cert.warnings.push_back("certificate is vacuous for a loss bounded by 1");
  return cert;
}

double vc_baseline(std::size_t d, std::size_t K, std::uint64_t n) {
  if (d == 0 || K == 0 || n == 0) throw InvalidInput("vc_baseline: arguments must be positive");
  return std::sqrt(static_cast<double>(d) * static_cast<double>(K) / static_cast<double>(n));
}

}  // namespace ptb::nn
