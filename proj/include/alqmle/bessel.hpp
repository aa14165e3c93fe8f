// Modified Bessel function of the second kind K_v, for the orders
// v = 1 - p/2 that appear in the asymmetric-Laplace likelihood.
//
// Evaluation strategy:
//   * half-integer |v|: the terminating closed form
//       K_{n+1/2}(u) = sqrt(pi/(2u)) e^{-u} sum_{k<=n} (n+k)!/(k!(n-k)!) (2u)^{-k}
//     (exact up to rounding; covers every odd innovation dimension p),
//   * u > 30: log-scale large-argument expansion
//       log K_v(u) = log sqrt(pi/(2u)) - u + log(1 + (4v^2-1)/(8u) + ...),
//     truncated at its smallest term (< 1e-12 error at the switch point),
//   * otherwise: trapezoid rule on the substituted integral
//       K_v(u) = 1/2 (u/2)^v int e^{-v t} exp(-e^t - (u^2/4) e^{-t}) dt,
//     whose integrand decays double-exponentially in both directions; the
//     step shrinks with the peak curvature so large arguments keep enough
//     nodes across the peak.
//
// Everything is computed in log scale first; bessel_k exponentiates, so a
// non-representable magnitude surfaces as +inf (small u, v != 0) or 0
// (large u) rather than as garbage.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace alqmle {

// Order of the likelihood kernel for innovation dimension p (p >= 1).
inline double bessel_order_from_dimension(int p) {
  if (p < 1) throw std::domain_error("bessel order: dimension p must be >= 1");
  return 1.0 - p / 2.0;
}

// Switch point between quadrature and the large-argument expansion.
inline constexpr double kBesselAsymptoticSwitch = 30.0;

namespace detail {

// True if |v| = n + 1/2 for integer n >= 0; writes n.
inline bool half_integer_index(double v, int* n) {
  const double w2 = 2.0 * std::abs(v);
  const double r = std::round(w2);
  if (std::abs(w2 - r) > 1e-12) return false;
  const auto ri = static_cast<long long>(r);
  if (ri % 2 == 0) return false;
  *n = static_cast<int>((ri - 1) / 2);
  return true;
}

inline double log_kv_half_integer(int n, double u) {
  // log-sum-exp over the n+1 polynomial terms keeps tiny u safe from
  // overflow in (2u)^{-k}.
  std::array<double, 64> logterm{};
  const double log2u = std::log(2.0 * u);
  double peak = -INFINITY;
  for (int k = 0; k <= n; ++k) {
    logterm[k] = std::lgamma(n + k + 1.0) - std::lgamma(k + 1.0) -
                 std::lgamma(n - k + 1.0) - k * log2u;
    peak = std::max(peak, logterm[k]);
  }
  double sum = 0.0;
  for (int k = 0; k <= n; ++k) sum += std::exp(logterm[k] - peak);
  return 0.5 * std::log(M_PI / (2.0 * u)) - u + peak + std::log(sum);
}

inline double log_kv_asymptotic(double v, double u) {
  const double fourv2 = 4.0 * v * v;
  double term = 1.0;
  double sum = 1.0;
  double prev = INFINITY;
  for (int k = 1; k <= 40; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (fourv2 - odd * odd) / (8.0 * u * k);
    if (std::abs(term) >= prev) break;  // asymptotic: stop at smallest term
    sum += term;
    prev = std::abs(term);
    if (prev < 1e-18 * std::abs(sum)) break;
  }
  return 0.5 * std::log(M_PI / (2.0 * u)) - u + std::log(sum);
}

inline double log_kv_quadrature(double v, double u) {
  const double c = 0.25 * u * u;
  // peak of psi(t) = -v t - e^t - c e^{-t}
  const double s_star = 0.5 * (-v + std::sqrt(v * v + 4.0 * c));
  const double t_star = std::log(s_star);
  const double curvature = s_star + c / s_star;  // |psi''(t_star)|
  const double h = std::min(0.20, 0.8 / std::sqrt(curvature));
  const double drop = 40.0;
  const double peak = -v * t_star - s_star - c / s_star;

  double sum = 1.0;  // node at t_star
  const double eh = std::exp(h);
  for (int side = 0; side < 2; ++side) {
    const double step_mult = side == 0 ? eh : 1.0 / eh;
    const double step_sign = side == 0 ? 1.0 : -1.0;
    double et = s_star;
    double t = t_star;
    for (int i = 1; i <= 4000; ++i) {
      t += step_sign * h;
      et *= step_mult;
      const double rel = -v * t - et - c / et - peak;
      if (rel < -drop) break;
      sum += std::exp(rel);
    }
  }
  const double log_integral = peak + std::log(h * sum);
  return std::log(0.5) + v * std::log(0.5 * u) + log_integral;
}

}  // namespace detail

// log K_v(u), u > 0. Never overflows or underflows internally.
inline double log_bessel_k(double v, double u) {
  if (!(u > 0.0))
    throw std::domain_error("log_bessel_k: argument u must be > 0");
  int n = 0;
  if (detail::half_integer_index(v, &n))
    return detail::log_kv_half_integer(n, u);
  if (u > kBesselAsymptoticSwitch) return detail::log_kv_asymptotic(v, u);
  return detail::log_kv_quadrature(v, u);
}

// K_v(u), u > 0. Returns +inf when the value exceeds the representable
// range (tiny u at negative-power orders); use log_bessel_k there.
inline double bessel_k(double v, double u) {
  if (!(u > 0.0)) throw std::domain_error("bessel_k: argument u must be > 0");
  return std::exp(log_bessel_k(v, u));
}

// A(v) = Gamma(-v) / 2^{v+1}, the constant realized by the envelope bound
// K_v(u) <= A(v) u^v valid for all v < 0 (drop the e^{-u^2/4s} factor in
// the integral representation).
inline double bessel_bound_constant(double v) {
  if (!(v < 0.0))
    throw std::domain_error("bessel_bound_constant: requires v < 0");
  return std::tgamma(-v) / std::exp2(v + 1.0);
}

}  // namespace alqmle
