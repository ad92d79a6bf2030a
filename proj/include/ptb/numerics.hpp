#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace ptb::numerics {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr std::uint64_t kDefaultSeed = 0x5eed0f5bec7ULL;

/// Dense row-major matrix of doubles. Dimensions are at least 1x1.
class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return entries_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  std::span<double> entries() noexcept { return entries_; }
  std::span<const double> entries() const noexcept { return entries_; }

  bool all_finite() const noexcept;
  Matrix transposed() const;
  Matrix scaled(double alpha) const;

  /// y = A x
  std::vector<double> apply(std::span<const double> x) const;
  /// y = A^T x
  std::vector<double> apply_transposed(std::span<const double> x) const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> entries_;
};

Matrix operator+(Matrix lhs, const Matrix& rhs);
Matrix operator-(Matrix lhs, const Matrix& rhs);

struct QuadratureSpec {
  double abs_tol = 1e-13;
  double rel_tol = 1e-11;
  std::size_t max_subdivisions = 4096;

  void validate() const;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Largest singular value of `a`, within relative error `tol`.
///
/// Matrices with max(rows, cols) <= 32 go through the one-sided Jacobi SVD;
/// larger ones use power iteration on A^T A from a random unit start drawn
/// from `seed`, stopping when the relative Rayleigh-quotient change drops
/// below tol / 100. Throws InvalidInput on non-finite entries or tol <= 0.
double spectral_norm(const Matrix& a, double tol = 1e-12, std::uint64_t seed = kDefaultSeed);

/// Power-iteration route only (no small-matrix fallback).
double spectral_norm_power(const Matrix& a, double tol, std::uint64_t seed);

/// All singular values, descending, by one-sided (Hestenes) Jacobi rotations.
std::vector<double> singular_values(const Matrix& a);

/// ( sum_i ( sum_j |A_ij|^p )^{q/p} )^{1/q}; p or q may be kInf (max).
/// Throws UnsupportedNorm unless p, q >= 1.
double group_norm_pq(const Matrix& a, double p, double q);

double frobenius_norm(const Matrix& a);

/// Adaptive Gauss-Kronrod on a finite interval. Throws AccuracyError when the
/// tolerance is not met within spec.max_subdivisions.
QuadratureResult integrate(const std::function<double(double)>& f, double lo, double hi,
                           const QuadratureSpec& spec = {});

/// Same, for integrands with an integrable singularity at 0. The piece
/// [0, min(hi, 1e-3)] is covered by a dyadic grid of panels shrinking toward
/// 0; the rest is adaptive.
QuadratureResult integrate_from_singular_zero(const std::function<double(double)>& f, double hi,
                                              const QuadratureSpec& spec = {});

/// I(a) = int_0^a sqrt(ln(1 + s^-2)) ds.
double entropy_integral_I(double a, const QuadratureSpec& spec = {});

/// Closed-form Jensen upper bound a * sqrt(ln(a + 1/a) + 1 + b) on J(a, b).
double integral_bound_J(double a, double b);

/// J(a, b) = int_0^a sqrt(ln(s + 1/s) + b) ds by quadrature.
double integral_J(double a, double b, const QuadratureSpec& spec = {});

/// c(n) = ln(e + ln^2(2 n^2)).
double c_of_n(std::uint64_t n);

/// gamma_m = sqrt(2 ln(2 e m)).
double gamma_m(std::uint64_t m);

/// sum_k ln(x_k); -inf if any factor is zero. Factors must be >= 0.
double log_product(std::span<const double> factors);

/// SplitMix64 step applied to (master, stream): independent per-trial seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Welford accumulator for sample mean and standard error of the mean.
class RunningMoments {
 public:
  void add(double x);
  std::size_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept;
  MonteCarloEstimate estimate() const noexcept;

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace ptb::numerics
