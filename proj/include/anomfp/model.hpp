#pragma once

// Heavy-tail equilibrium F(v) = C^2 (1+|v|^2)^{-beta/2} and the closed-form
// functions built from it: M = F^{1/2}/C, the potentials W, W~, V and the
// penalty profile Phi.  Everything here is a pure function of ModelParams.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "anomfp/error.hpp"

namespace anomfp {

/// Area of the unit sphere S^{k} in R^{k+1}; |S^0| = 2.
inline double sphere_area(int k) {
  const double n = k + 1;
  return 2.0 * std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0);
}

namespace detail {

// int_{R^d} (1+|v|^2)^{-p} dv, evaluated radially with double-exponential quadrature.
inline double radial_power_integral(int d, double p) {
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [d, p](double rho) { return std::pow(rho, d - 1) * std::pow(1.0 + rho * rho, -p); };
  double err = 0.0;
  const double value = integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(),
                                            1e-15, &err);
  return sphere_area(d - 1) * value;
}

}  // namespace detail

struct ModelParams {
  int d = 1;
  double beta = 2.5;
  double gamma = 1.25;      // beta / 2
  double alpha = 7.0 / 6.0; // (2 gamma - d + 2) / 3
  double c_beta_sq = 0.0;   // 1 / int (1+|v|^2)^{-beta/2}
  double c_phi = 0.0;       // 1 / int <v>^{-2-2 gamma}

  /// Validates d >= 1, d < beta < d + 4 and beta != d + 1, then caches the
  /// normalization constants.
  static ModelParams make(int d, double beta) {
    if (d < 1) throw ParameterError("dimension d must be >= 1, got " + std::to_string(d));
    if (!(beta > d && beta < d + 4))
      throw ParameterError("tail exponent must satisfy d < beta < d + 4 (d = " +
                           std::to_string(d) + ", beta = " + std::to_string(beta) + ")");
    if (std::abs(beta - (d + 1)) < 1e-12)
      throw ExcludedCaseError("beta = d + 1 is excluded: the eigenvalue expansion picks up "
                              "logarithmic corrections in that case");
    ModelParams p;
    p.d = d;
    p.beta = beta;
    p.gamma = beta / 2.0;
    p.alpha = (2.0 * p.gamma - d + 2.0) / 3.0;
    p.c_beta_sq = 1.0 / detail::radial_power_integral(d, beta / 2.0);
    p.c_phi = 1.0 / detail::radial_power_integral(d, 1.0 + p.gamma);
    return p;
  }

  double c_beta() const { return std::sqrt(c_beta_sq); }

  /// gamma (gamma - d + 2): coefficient of the Hardy potential in the limit problem.
  double hardy_coefficient() const { return gamma * (gamma - d + 2.0); }

  /// Exponent of the leading correction to mu(eta) eta^{-alpha}.
  double correction_exponent() const { return std::min((2.0 * gamma - d) / 3.0, 2.0 / 3.0); }
};

// Radial kernels in terms of |v|^2.

inline double equilibrium_m_sq(const ModelParams& p, double v_sq) {
  return std::pow(1.0 + v_sq, -p.gamma / 2.0);
}

inline double potential_w_sq(const ModelParams& p, double v_sq) {
  const double den = (1.0 + v_sq) * (1.0 + v_sq);
  return (p.hardy_coefficient() * v_sq - p.gamma * p.d) / den;
}

inline double potential_w_tilde_sq(const ModelParams& p, double v_sq) {
  return p.hardy_coefficient() / (1.0 + v_sq);
}

inline double potential_v_sq(const ModelParams& p, double v_sq) {
  return p.gamma * (p.gamma + 2.0) / ((1.0 + v_sq) * (1.0 + v_sq));
}

inline double penalty_phi_sq(const ModelParams& p, double v_sq) {
  return p.c_phi * std::pow(1.0 + v_sq, -(2.0 + p.gamma) / 2.0);
}

// Axisymmetric evaluation at (v1, r = |v'|).

inline double equilibrium_m(const ModelParams& p, double v1, double r = 0.0) {
  return equilibrium_m_sq(p, v1 * v1 + r * r);
}
inline double potential_w(const ModelParams& p, double v1, double r = 0.0) {
  return potential_w_sq(p, v1 * v1 + r * r);
}
inline double potential_w_tilde(const ModelParams& p, double v1, double r = 0.0) {
  return potential_w_tilde_sq(p, v1 * v1 + r * r);
}
inline double potential_v(const ModelParams& p, double v1, double r = 0.0) {
  return potential_v_sq(p, v1 * v1 + r * r);
}
inline double penalty_phi(const ModelParams& p, double v1, double r = 0.0) {
  return penalty_phi_sq(p, v1 * v1 + r * r);
}

// Full-dimensional evaluation, used by tests.

inline double norm_sq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

inline double equilibrium_m(const ModelParams& p, std::span<const double> v) {
  return equilibrium_m_sq(p, norm_sq(v));
}
inline double potential_w(const ModelParams& p, std::span<const double> v) {
  return potential_w_sq(p, norm_sq(v));
}
inline double potential_w_tilde(const ModelParams& p, std::span<const double> v) {
  return potential_w_tilde_sq(p, norm_sq(v));
}
inline double potential_v(const ModelParams& p, std::span<const double> v) {
  return potential_v_sq(p, norm_sq(v));
}
inline double penalty_phi(const ModelParams& p, std::span<const double> v) {
  return penalty_phi_sq(p, norm_sq(v));
}

}  // namespace anomfp
