#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ptb::divergences {

/// Gaussian with diagonal covariance. A zero stddev entry is the Dirac limit
/// along that coordinate.
class DiagonalGaussian {
 public:
  DiagonalGaussian(std::vector<double> mean, std::vector<double> stddev);
  /// Isotropic: every coordinate gets the same stddev.
  DiagonalGaussian(std::vector<double> mean, double stddev);

  std::size_t dimension() const noexcept { return mean_.size(); }
  const std::vector<double>& mean() const noexcept { return mean_; }
  const std::vector<double>& stddev() const noexcept { return stddev_; }

 private:
  std::vector<double> mean_;
  std::vector<double> stddev_;
};

/// Rotation-invariant heavy-tailed prior on R^d with density
/// 2 / (pi S_{d-1} (|x|^{d-1} + |x|^{d+1})).
class GeneralizedCauchyPrior {
 public:
  explicit GeneralizedCauchyPrior(std::size_t dimension);

  std::size_t dimension() const noexcept { return d_; }
  /// Surface area of the unit sphere in R^d; 2 when d = 1.
  double sphere_area() const noexcept { return sphere_area_; }
  /// Log density at x; +inf at the origin when d >= 2.
  double log_density(std::span<const double> x) const;

 private:
  std::size_t d_;
  double sphere_area_;
};

struct Complexity {
  double kl;
  double delta;
  double h_delta;
};

enum class CauchyBoundMode { tight, quadratic };

/// KL(q || u) for diagonal Gaussians. +inf if q is degenerate on a
/// coordinate where u is not.
double kl_gaussian_gaussian(const DiagonalGaussian& q, const DiagonalGaussian& u);

/// Closed-form upper bound on KL(N(mu, rho^2 I_d) || U_d).
double kl_gaussian_cauchy_bound(std::span<const double> mu, double rho, CauchyBoundMode mode);
/// Same, from |mu|^2 and d only (avoids materializing mu for large nets).
double kl_gaussian_cauchy_bound(double mu_sq_norm, std::size_t d, double rho, CauchyBoundMode mode);

double cauchy_prior_log_density(std::span<const double> x);

/// KL(N(mu, rho^2) || standard Cauchy) in one dimension, by quadrature.
double kl_gaussian_cauchy_1d_quadrature(double mu, double rho);

Complexity complexity_H(double kl, double delta);

}  // namespace ptb::divergences
