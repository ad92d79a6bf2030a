#include "ptb/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ptb/errors.hpp"

namespace ptb::numerics {

namespace {

constexpr std::size_t kJacobiFallbackMax = 32;
constexpr double kSingularSplit = 1e-3;
constexpr int kDyadicPanels = 60;

void require_finite(const Matrix& a, const char* where) {
  if (!a.all_finite()) {
    throw InvalidInput(std::string(where) + ": matrix has non-finite entries");
  }
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

QuadratureResult gk15_panel(const std::function<double(double)>& f, double lo, double hi) {
  QuadratureResult r;
  r.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, lo, hi, 0, 0.0,
                                                                          &r.error_estimate);
  return r;
}

struct Panel {
  double lo;
  double hi;
  QuadratureResult result;
  bool operator<(const Panel& other) const {
    return result.error_estimate < other.result.error_estimate;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill) {
  if (rows == 0 || cols == 0) throw InvalidInput("Matrix: dimensions must be >= 1");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows == 0 || cols == 0) throw InvalidInput("Matrix: dimensions must be >= 1");
  if (entries_.size() != rows * cols) {
    throw InvalidInput("Matrix: expected " + std::to_string(rows * cols) + " entries, got " +
                       std::to_string(entries_.size()));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(entries_.begin(), entries_.end(), [](double x) { return std::isfinite(x); });
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::scaled(double alpha) const {
  Matrix s = *this;
  for (double& x : s.entries_) x *= alpha;
  return s;
}

std::vector<double> Matrix::apply(std::span<const double> x) const {
  if (x.size() != cols_) throw InvalidInput("Matrix::apply: dimension mismatch");
  std::vector<double> y(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    y[i] = dot(std::span<const double>(entries_).subspan(i * cols_, cols_), x);
  }
  return y;
}

std::vector<double> Matrix::apply_transposed(std::span<const double> x) const {
  if (x.size() != rows_) throw InvalidInput("Matrix::apply_transposed: dimension mismatch");
  std::vector<double> y(cols_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) y[j] += (*this)(i, j) * x[i];
  return y;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw InvalidInput("Matrix +=: shape mismatch");
  for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] += other.entries_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw InvalidInput("Matrix -=: shape mismatch");
  for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] -= other.entries_[k];
  return *this;
}

Matrix operator+(Matrix lhs, const Matrix& rhs) { return lhs += rhs; }
Matrix operator-(Matrix lhs, const Matrix& rhs) { return lhs -= rhs; }

// ---------------------------------------------------------------------------
// Spectral norms

std::vector<double> singular_values(const Matrix& input) {
  require_finite(input, "singular_values");
  // Work on the orientation with fewer columns; singular values are shared.
  const Matrix a = input.cols() > input.rows() ? input.transposed() : input;
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();

  // Column-major working copy so rotations touch contiguous memory.
  std::vector<std::vector<double>> u(cols, std::vector<double>(rows));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) u[j][i] = a(i, j);

  constexpr double eps = 1e-15;
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        const double alpha = dot(u[p], u[p]);
        const double beta = dot(u[q], u[q]);
        const double gamma = dot(u[p], u[q]);
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double up = u[p][i];
          const double uq = u[q][i];
          u[p][i] = c * up - s * uq;
          u[q][i] = s * up + c * uq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sv(cols);
  for (std::size_t j = 0; j < cols; ++j) sv[j] = std::sqrt(dot(u[j], u[j]));
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

double spectral_norm_power(const Matrix& a, double tol, std::uint64_t seed) {
  require_finite(a, "spectral_norm");
  if (!(tol > 0.0)) throw InvalidInput("spectral_norm: tol must be > 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(a.cols());
  for (double& x : v) x = normal(rng);
  double norm = std::sqrt(dot(v, v));
  for (double& x : v) x /= norm;

  const double stop = tol / 100.0;
  double rayleigh = 0.0;
  for (int iter = 0; iter < 100000; ++iter) {
    const std::vector<double> av = a.apply(v);
    const double next = dot(av, av);
    if (next == 0.0) return 0.0;
    std::vector<double> w = a.apply_transposed(av);
    norm = std::sqrt(dot(w, w));
    for (std::size_t j = 0; j < w.size(); ++j) v[j] = w[j] / norm;
    if (iter > 0 && std::abs(next - rayleigh) <= stop * next) {
      rayleigh = next;
      break;
    }
    rayleigh = next;
  }
  const std::vector<double> av = a.apply(v);
  return std::sqrt(std::max(rayleigh, dot(av, av)));
}

double spectral_norm(const Matrix& a, double tol, std::uint64_t seed) {
  require_finite(a, "spectral_norm");
  if (!(tol > 0.0)) throw InvalidInput("spectral_norm: tol must be > 0");
  if (std::max(a.rows(), a.cols()) <= kJacobiFallbackMax) return singular_values(a).front();
  return spectral_norm_power(a, tol, seed);
}

double group_norm_pq(const Matrix& a, double p, double q) {
  if (!(p >= 1.0) || !(q >= 1.0)) {
    throw UnsupportedNorm("group_norm_pq: (p, q) must satisfy p >= 1 and q >= 1");
  }
  auto row_norm = [&](std::size_t i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double x = std::abs(a(i, j));
      acc = std::isinf(p) ? std::max(acc, x) : acc + std::pow(x, p);
    }
    return std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
  };
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double r = row_norm(i);
    acc = std::isinf(q) ? std::max(acc, r) : acc + std::pow(r, q);
  }
  return std::isinf(q) ? acc : std::pow(acc, 1.0 / q);
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double x : a.entries()) s += x * x;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Quadrature

void QuadratureSpec::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || max_subdivisions < 1) {
    throw InvalidInput("QuadratureSpec: need abs_tol > 0, rel_tol > 0, max_subdivisions >= 1");
  }
}

QuadratureResult integrate(const std::function<double(double)>& f, double lo, double hi,
                           const QuadratureSpec& spec) {
  spec.validate();
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw InvalidInput("integrate: bounds must be finite");
  if (lo == hi) return {};
  if (hi < lo) {
    QuadratureResult r = integrate(f, hi, lo, spec);
    r.value = -r.value;
    return r;
  }

  std::priority_queue<Panel> panels;
  QuadratureResult total = gk15_panel(f, lo, hi);
  panels.push({lo, hi, total});
  std::size_t subdivisions = 1;

  auto converged = [&] {
    return total.error_estimate <= std::max(spec.abs_tol, spec.rel_tol * std::abs(total.value));
  };
  while (!converged()) {
    if (subdivisions >= spec.max_subdivisions) {
      throw AccuracyError("integrate: tolerance not met within " +
                              std::to_string(spec.max_subdivisions) + " subdivisions",
                          total.value, total.error_estimate);
    }
    const Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    const Panel left{worst.lo, mid, gk15_panel(f, worst.lo, mid)};
    const Panel right{mid, worst.hi, gk15_panel(f, mid, worst.hi)};
    total.value += left.result.value + right.result.value - worst.result.value;
    total.error_estimate +=
        left.result.error_estimate + right.result.error_estimate - worst.result.error_estimate;
    panels.push(left);
    panels.push(right);
    ++subdivisions;
  }

  // Re-sum from the panels to shed accumulated update round-off.
  QuadratureResult exact_sum;
  while (!panels.empty()) {
    exact_sum.value += panels.top().result.value;
    exact_sum.error_estimate += panels.top().result.error_estimate;
    panels.pop();
  }
  return exact_sum;
}

QuadratureResult integrate_from_singular_zero(const std::function<double(double)>& f, double hi,
                                              const QuadratureSpec& spec) {
  spec.validate();
  if (!(hi >= 0.0) || !std::isfinite(hi)) throw InvalidInput("integrate: upper bound must be finite and >= 0");
  if (hi == 0.0) return {};

  const double split = std::min(hi, kSingularSplit);
  QuadratureResult near;
  double right = split;
  for (int k = 0; k < kDyadicPanels; ++k) {
    const double left = 0.5 * right;
    const QuadratureResult p = gk15_panel(f, left, right);
    near.value += p.value;
    near.error_estimate += p.error_estimate;
    right = left;
  }
  const QuadratureResult tail = gk15_panel(f, 0.0, right);
  near.value += tail.value;
  near.error_estimate += tail.error_estimate;

  if (split == hi) return near;
  QuadratureResult far = integrate(f, split, hi, spec);
  return {near.value + far.value, near.error_estimate + far.error_estimate};
}

double entropy_integral_I(double a, const QuadratureSpec& spec) {
  if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidInput("entropy_integral_I: need finite a >= 0");
  if (a == 0.0) return 0.0;
  // log1p(s^-2) overflows to inf only below ~1e-154; beyond that the
  // asymptote sqrt(-2 ln s) is exact to double precision.
  const auto integrand = [](double s) {
    const double inv = 1.0 / s;
    const double arg = std::isfinite(inv * inv) ? std::log1p(inv * inv) : -2.0 * std::log(s);
    return std::sqrt(arg);
  };
  return integrate_from_singular_zero(integrand, a, spec).value;
}

double integral_bound_J(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw InvalidInput("integral_bound_J: non-finite input");
  if (!(a > 0.0) || !(b >= 0.0)) throw InvalidInput("integral_bound_J: need a > 0, b >= 0");
  return a * std::sqrt(std::log(a + 1.0 / a) + 1.0 + b);
}

double integral_J(double a, double b, const QuadratureSpec& spec) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw InvalidInput("integral_J: non-finite input");
  if (!(a > 0.0) || !(b >= 0.0)) throw InvalidInput("integral_J: need a > 0, b >= 0");
  const auto integrand = [b](double s) { return std::sqrt(std::log(s + 1.0 / s) + b); };
  return integrate_from_singular_zero(integrand, a, spec).value;
}

// ---------------------------------------------------------------------------
// Special constants

double c_of_n(std::uint64_t n) {
  if (n == 0) throw InvalidInput("c_of_n: n must be >= 1");
  const double nd = static_cast<double>(n);
  const double l = std::log(2.0) + 2.0 * std::log(nd);
  return std::log(std::numbers::e + l * l);
}

double gamma_m(std::uint64_t m) {
  if (m == 0) throw InvalidInput("gamma_m: m must be >= 1");
  return std::sqrt(2.0 * (std::log(2.0 * static_cast<double>(m)) + 1.0));
}

double log_product(std::span<const double> factors) {
  double s = 0.0;
  for (double x : factors) {
    if (!(x >= 0.0)) throw InvalidInput("log_product: factors must be >= 0");
    if (x == 0.0) return -kInf;
    s += std::log(x);
  }
  return s;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + (stream + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void RunningMoments::add(double x) {
  ++count_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (x - mean_);
}

double RunningMoments::variance() const noexcept {
  return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0;
}

MonteCarloEstimate RunningMoments::estimate() const noexcept {
  const double se = count_ > 0 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
  return {mean_, se, count_};
}

}  // namespace ptb::numerics
