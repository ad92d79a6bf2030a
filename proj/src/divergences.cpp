#include "ptb/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ptb/errors.hpp"
#include "ptb/numerics.hpp"

namespace ptb::divergences {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidInput(std::string(what) + ": non-finite entry");
  }
}

}  // namespace

DiagonalGaussian::DiagonalGaussian(std::vector<double> mean, std::vector<double> stddev)
    : mean_(std::move(mean)), stddev_(std::move(stddev)) {
  if (mean_.size() != stddev_.size()) throw InvalidInput("DiagonalGaussian: dimension mismatch");
  if (mean_.empty()) throw InvalidInput("DiagonalGaussian: dimension must be >= 1");
  require_finite(mean_, "DiagonalGaussian mean");
  require_finite(stddev_, "DiagonalGaussian stddev");
  for (double s : stddev_) {
    if (s < 0.0) throw InvalidInput("DiagonalGaussian: stddev must be >= 0");
  }
}

DiagonalGaussian::DiagonalGaussian(std::vector<double> mean, double stddev)
    : DiagonalGaussian(mean, std::vector<double>(mean.size(), stddev)) {}

GeneralizedCauchyPrior::GeneralizedCauchyPrior(std::size_t dimension) : d_(dimension) {
  if (d_ == 0) throw InvalidInput("GeneralizedCauchyPrior: dimension must be >= 1");
  const double d = static_cast<double>(d_);
  sphere_area_ = std::exp(std::log(d) + 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0));
}

double GeneralizedCauchyPrior::log_density(std::span<const double> x) const {
  if (x.size() != d_) throw InvalidInput("GeneralizedCauchyPrior: dimension mismatch");
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  const double d = static_cast<double>(d_);
  if (r2 == 0.0 && d_ >= 2) return numerics::kInf;
  // |x|^{d-1} + |x|^{d+1} = |x|^{d-1} (1 + |x|^2)
  const double log_r = 0.5 * std::log(r2);
  const double log_radial = (d_ == 1 ? 0.0 : (d - 1.0) * log_r) + std::log1p(r2);
  return std::log(2.0) - std::log(std::numbers::pi) - std::log(sphere_area_) - log_radial;
}

double kl_gaussian_gaussian(const DiagonalGaussian& q, const DiagonalGaussian& u) {
  if (q.dimension() != u.dimension()) throw InvalidInput("kl_gaussian_gaussian: dimension mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < q.dimension(); ++i) {
    const double su = u.stddev()[i];
    const double sq = q.stddev()[i];
    if (!(su > 0.0)) throw InvalidInput("kl_gaussian_gaussian: reference stddev must be > 0");
    if (sq == 0.0) return numerics::kInf;
    const double ratio = sq / su;
    const double shift = (q.mean()[i] - u.mean()[i]) / su;
    kl += 0.5 * (ratio * ratio + shift * shift - 1.0) - std::log(ratio);
  }
  return kl;
}

double kl_gaussian_cauchy_bound(double mu_sq_norm, std::size_t d, double rho, CauchyBoundMode mode) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidInput("kl_gaussian_cauchy_bound: rho must be > 0");
  if (d == 0) throw InvalidInput("kl_gaussian_cauchy_bound: d must be >= 1");
  if (!(mu_sq_norm >= 0.0)) throw InvalidInput("kl_gaussian_cauchy_bound: |mu|^2 must be >= 0");
  const double dd = static_cast<double>(d);
  const double rho2 = rho * rho;
  switch (mode) {
    case CauchyBoundMode::tight:
      return 0.5 * (dd + 1.0) * std::log1p(mu_sq_norm / (dd * rho2)) + std::log((1.0 + dd * rho2) / rho);
    case CauchyBoundMode::quadratic:
      return mu_sq_norm / (2.0 * rho2) + std::log((1.0 + 2.0 * dd * rho2) / rho);
  }
  throw InvalidInput("kl_gaussian_cauchy_bound: unknown mode");
}

double kl_gaussian_cauchy_bound(std::span<const double> mu, double rho, CauchyBoundMode mode) {
  require_finite(mu, "kl_gaussian_cauchy_bound");
  double sq = 0.0;
  for (double x : mu) sq += x * x;
  return kl_gaussian_cauchy_bound(sq, mu.size(), rho, mode);
}

double cauchy_prior_log_density(std::span<const double> x) {
  return GeneralizedCauchyPrior(x.size()).log_density(x);
}

double kl_gaussian_cauchy_1d_quadrature(double mu, double rho) {
  if (!(rho > 0.0) || !std::isfinite(mu)) throw InvalidInput("kl_gaussian_cauchy_1d_quadrature: bad parameters");
  // KL = -entropy(q) - E_q ln u(x), with x = mu + rho g, g standard normal.
  const double neg_entropy = -0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * rho * rho);
  const auto integrand = [mu, rho](double g) {
    const double x = mu + rho * g;
    return std::exp(-0.5 * g * g) / std::sqrt(2.0 * std::numbers::pi) * std::log1p(x * x);
  };
  // Unit panels in g, plus a break where x = 0: a single panel over [-40, 40]
  // can miss the Gaussian bump entirely when rho is small.
  std::vector<double> cuts;
  for (int k = -40; k <= 40; ++k) cuts.push_back(k);
  if (std::abs(mu / rho) < 40.0) cuts.push_back(-mu / rho);
  std::sort(cuts.begin(), cuts.end());
  double e_log1p = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i]) e_log1p += numerics::integrate(integrand, cuts[i], cuts[i + 1]).value;
  }
  return neg_entropy + std::log(std::numbers::pi) + e_log1p;
}

Complexity complexity_H(double kl, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("complexity_H: delta must lie in (0, 1)");
  if (!(kl >= 0.0)) throw InvalidInput("complexity_H: kl must be >= 0");
  return {kl, delta, kl - std::log(delta)};
}

}  // namespace ptb::divergences
