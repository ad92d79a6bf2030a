#pragma once

// Test-only reference computations, written without the library's numerics.

#include <cmath>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle {

using real = long double;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline std::vector<std::pair<real, real>> gauss_legendre(int n) {
  std::vector<std::pair<real, real>> out;
  const real pi = std::numbers::pi_v<real>;
  for (int i = 1; i <= n; ++i) {
    real x = std::cos(pi * (i - 0.25L) / (n + 0.5L));
    real dp = 0;
    for (int it = 0; it < 100; ++it) {
      real p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      const real dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-19L) break;
    }
    out.emplace_back(x, 2 / ((1 - x * x) * dp * dp));
  }
  return out;
}

/// Composite Gauss-Legendre with `panels` equal panels of order 20.
inline real composite(const std::function<real(real)>& f, real a, real b, int panels) {
  static const auto rule = gauss_legendre(20);
  const real h = (b - a) / panels;
  real sum = 0;
  for (int p = 0; p < panels; ++p) {
    const real mid = a + (p + 0.5L) * h;
    for (const auto& [x, w] : rule) sum += w * f(mid + 0.5L * h * x);
  }
  return 0.5L * h * sum;
}

/// Doubles the panel count until two successive values agree to `tol`.
inline real converged(const std::function<real(real)>& f, real a, real b, real tol = 1e-13L) {
  int panels = 8;
  real prev = composite(f, a, b, panels);
  for (int it = 0; it < 14; ++it) {
    panels *= 2;
    const real next = composite(f, a, b, panels);
    if (std::fabs(next - prev) <= tol * std::fmax(1.0L, std::fabs(next))) return next;
    prev = next;
  }
  return prev;
}

/// int_0^a g(s) ds for g with a log singularity at 0, via s = e^{-u}.
inline real from_zero(const std::function<real(real)>& g, real a) {
  if (a <= 0) return 0;
  const auto h = [&](real u) { return g(std::exp(-u)) * std::exp(-u); };
  // tail beyond u = 80 is below e^{-80} * poly(u)
  return converged(h, -std::log(a), 80.0L);
}

/// I(a) = int_0^a sqrt(ln(1 + s^-2)) ds
inline real entropy_I(real a) {
  return from_zero([](real s) { return std::sqrt(std::log1p(1 / (s * s))); }, a);
}

/// J(a, b) = int_0^a sqrt(ln(s + 1/s) + b) ds
inline real integral_J(real a, real b) {
  return from_zero([b](real s) { return std::sqrt(std::log(s + 1 / s) + b); }, a);
}

/// KL(N(mu, rho^2) || standard Cauchy) by quadrature of E ln(1 + x^2).
inline real kl_normal_cauchy(real mu, real rho) {
  const real pi = std::numbers::pi_v<real>;
  const auto f = [&](real g) {
    const real x = mu + rho * g;
    return std::exp(-0.5L * g * g) / std::sqrt(2 * pi) * std::log1p(x * x);
  };
  const real expect = converged(f, -40.0L, 40.0L, 1e-15L);
  return -0.5L * std::log(2 * pi * std::exp(1.0L) * rho * rho) + std::log(pi) + expect;
}

inline real c_of_n(real n) {
  const real l = std::log(2 * n * n);
  return std::log(std::exp(1.0L) + l * l);
}

inline real gamma_m(real m) { return std::sqrt(2 * std::log(2 * std::exp(1.0L) * m)); }

}  // namespace oracle
