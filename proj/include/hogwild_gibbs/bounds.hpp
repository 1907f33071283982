#pragma once

#include <cmath>
#include <cstddef>

#include "errors.hpp"

// Calculators for the theoretical error bounds. Constants that the theory
// leaves unspecified are explicit parameters defaulting to 1; callers fit
// them empirically rather than trusting a value. All logs are natural.

namespace hogwild {

namespace detail {

inline void require_dobrushin(double alpha) {
  if (!(alpha < 1.0)) throw DomainError("Dobrushin condition violated: alpha >= 1");
  if (!(alpha >= 0.0)) throw DomainError("alpha must be nonnegative");
}

}  // namespace detail

// |E f(X_t) - E f(X)| <= ||f||_inf · n · exp(-(1-α) t / n)
inline double bound_mixing_error(double f_inf_norm, double n, double alpha, double t) {
  detail::require_dobrushin(alpha);
  return f_inf_norm * n * std::exp(-(1.0 - alpha) * t / n);
}

/// Bias bound for f with |f(x) - f(y)| <= K d_H(x,y)^d:
/// K (C ln^d n + 1). For d = 1 the constant is the explicit expected-Hamming
/// constant τα/(1-α); for d >= 2 it is `moment_constant`.
inline double bound_lipschitz_bias(double K, std::size_t d, double tau, double alpha, double n,
                                   double moment_constant = 1.0) {
  detail::require_dobrushin(alpha);
  if (d < 1) throw DomainError("Lipschitz power d must be >= 1");
  const double c = d == 1 ? tau * alpha / (1.0 - alpha) : moment_constant;
  return K * (c * std::pow(std::log(n), static_cast<double>(d)) + 1.0);
}

// P[|f(X) - E f(X)| > t] <= 2 exp(-(1-α) t^{2/d} / (c ||a||_inf^{2/d} n))
inline double bound_concentration_tail(double a_inf, std::size_t d, double alpha, double n, double t,
                                       double c = 1.0) {
  detail::require_dobrushin(alpha);
  if (d < 1) throw DomainError("degree must be >= 1");
  if (!(t >= 0.0)) throw DomainError("tail threshold must be >= 0");
  const double e = 2.0 / static_cast<double>(d);
  return 2.0 * std::exp(-(1.0 - alpha) * std::pow(t, e) / (c * std::pow(a_inf, e) * n));
}

/// |E f_a(X)| <= 2 ||a||_inf (4 n d ln n / (1-α))^{d/2}. The ||a||_inf factor
/// normalizes coefficients; the bound is stated for ||a||_inf = 1.
inline double bound_marginals(double a_inf, double n, std::size_t d, double alpha) {
  detail::require_dobrushin(alpha);
  const double dd = static_cast<double>(d);
  return 2.0 * a_inf * std::pow(4.0 * n * dd * std::log(n) / (1.0 - alpha), dd / 2.0);
}

/// Bias of a degree-d polynomial under HOGWILD!:
///   d = 2: c · ||a||_inf · τα ln n / (1-α)^{3/2} · (n ln n)^{1/2}
///   else:  c · ||a||_inf · (n ln n)^{(d-1)/2}
inline double bound_bias_degree_d(double a_inf, std::size_t d, double tau, double alpha, double n,
                                  double c = 1.0) {
  detail::require_dobrushin(alpha);
  if (d < 1) throw DomainError("degree must be >= 1");
  const double ln = std::log(n);
  if (d == 2) {
    return c * a_inf * (tau * alpha * ln / std::pow(1.0 - alpha, 1.5)) * std::sqrt(n * ln);
  }
  return c * a_inf * std::pow(n * ln, (static_cast<double>(d) - 1.0) / 2.0);
}

}  // namespace hogwild
