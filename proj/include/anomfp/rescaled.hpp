#pragma once

// Limit profile H0 of the rescaled problem
//   [-Delta_s + gamma(gamma-d+2)/|s|^2 + i s1] H0 = 0,   H0 ~ |s|^{-gamma} at 0.
//
// Writing H0 = |s|^{-gamma} u removes the inverse-square potential exactly:
//   -|s|^{2 gamma} div(|s|^{-2 gamma} grad u) + i s1 u = 0.
// u is solved for as u = 1 + h on polar cells (rho, theta), theta measured from
// the s1 axis, with rho = s_c log(1 + e^xi) on a uniform xi grid: logarithmic
// near the origin and uniform far out.  h = 0 on the inner circle rho = s_in,
// zero flux through the outer circle and the axis.  d = 1 keeps s > 0 only and
// uses H0(-s) = conj H0(s).  The inner value is the leading term of u - 1 at
// the origin, h ~ -i rho^3 cos(theta) / (6 gamma - 2 d - 4), not zero.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "anomfp/error.hpp"
#include "anomfp/eigen.hpp"
#include "anomfp/grid.hpp"
#include "anomfp/model.hpp"
#include "anomfp/penalized.hpp"

namespace anomfp {

struct RescaledOptions {
  double s_in = 1e-4;
  double s_out = 0.0;    // 0 selects the dimension default
  double s_scale = 1.0;  // s_c of the radial map
  int n_radial = 0;      // 0 selects the dimension default
  int n_theta = 64;      // ignored for d = 1
  bool include_drift = true;
};

struct RescaledGrid {
  int d = 1;
  double s_in = 0.0, s_out = 0.0, s_scale = 1.0;
  int n_radial = 0, n_theta = 1;
  double h_xi = 0.0, h_theta = 0.0;
  double xi_in = 0.0;
  std::vector<double> rho, drho;            // cell centres and d rho / d xi
  std::vector<double> rho_face, drho_face;  // n_radial + 1 faces, face 0 = s_in
  std::vector<double> theta, theta_face;    // {0}, {..} for d = 1
  std::vector<double> volume;               // physical measure of each cell

  std::size_t size() const { return static_cast<std::size_t>(n_radial) * n_theta; }
  std::size_t index(int j, int t) const { return static_cast<std::size_t>(j) * n_theta + t; }
  double cos_theta(int t) const { return d == 1 ? 1.0 : std::cos(theta[t]); }
  double sin_pow(double th) const { return d <= 2 ? 1.0 : std::pow(std::sin(th), d - 2); }

  double xi_of(double r) const { return std::log(std::expm1(r / s_scale)); }
  double rho_of(double xi) const { return s_scale * std::log1p(std::exp(xi)); }
  double drho_of(double xi) const { return s_scale / (1.0 + std::exp(-xi)); }
  double d2rho_of(double xi) const {
    const double e = std::exp(-xi);
    return s_scale * e / ((1.0 + e) * (1.0 + e));
  }

  /// Nodes per decade of rho at the inner boundary.
  double nodes_per_decade_inner() const {
    return std::log(10.0) * s_in / (drho_face[0] * h_xi);
  }
};

inline RescaledGrid build_rescaled_grid(const ModelParams& p, const RescaledOptions& o) {
  RescaledGrid g;
  g.d = p.d;
  g.s_in = o.s_in;
  g.s_out = o.s_out > 0.0 ? o.s_out : (p.d == 1 ? 14.0 : 16.0);
  g.s_scale = o.s_scale;
  g.n_radial = o.n_radial > 0 ? o.n_radial : (p.d == 1 ? 6000 : 600);
  g.n_theta = p.d == 1 ? 1 : o.n_theta;
  if (!(g.s_in > 0.0 && g.s_in < 1.0 && g.s_out > 1.0))
    throw ParameterError("rescaled grid needs 0 < s_in < 1 < s_out");
  if (!(g.s_scale > 0.0)) throw ParameterError("radial map scale must be positive");
  if (g.n_radial < 16 || (p.d > 1 && g.n_theta < 8))
    throw ParameterError("rescaled grid too coarse");

  g.xi_in = g.xi_of(g.s_in);
  const double xi_out = g.xi_of(g.s_out);
  g.h_xi = (xi_out - g.xi_in) / g.n_radial;
  g.rho.resize(g.n_radial);
  g.drho.resize(g.n_radial);
  g.rho_face.resize(g.n_radial + 1);
  g.drho_face.resize(g.n_radial + 1);
  for (int j = 0; j <= g.n_radial; ++j) {
    const double xf = g.xi_in + j * g.h_xi;
    g.rho_face[j] = g.rho_of(xf);
    g.drho_face[j] = g.drho_of(xf);
    if (j < g.n_radial) {
      const double xc = xf + 0.5 * g.h_xi;
      g.rho[j] = g.rho_of(xc);
      g.drho[j] = g.drho_of(xc);
    }
  }
  g.rho_face.front() = g.s_in;
  g.rho_face.back() = g.s_out;
  if (g.nodes_per_decade_inner() < 8.0)
    throw ParameterError("rescaled grid resolves fewer than 8 nodes per decade at s_in");

  if (p.d == 1) {
    g.theta = {0.0};
    g.theta_face = {0.0, 0.0};
    g.h_theta = 1.0;
  } else {
    g.h_theta = std::numbers::pi / g.n_theta;
    g.theta.resize(g.n_theta);
    g.theta_face.resize(g.n_theta + 1);
    for (int t = 0; t <= g.n_theta; ++t) {
      g.theta_face[t] = t * g.h_theta;
      if (t < g.n_theta) g.theta[t] = (t + 0.5) * g.h_theta;
    }
  }
  const double sphere = p.d == 1 ? 1.0 : sphere_area(p.d - 2);
  g.volume.resize(g.size());
  for (int j = 0; j < g.n_radial; ++j)
    for (int t = 0; t < g.n_theta; ++t)
      g.volume[g.index(j, t)] = sphere * std::pow(g.rho[j], p.d - 1) * g.drho[j] * g.h_xi *
                                (p.d == 1 ? 1.0 : g.sin_pow(g.theta[t]) * g.h_theta);
  return g;
}

struct H0Solution {
  RescaledGrid grid;
  double gamma = 0.0;
  bool include_drift = true;
  CVector h;                   // u - 1 per cell
  std::vector<cplx> h_inner;   // value of h on the circle rho = s_in, per theta cell
  double residual = 0.0;       // relative residual of the sparse solve
  double outer_decay = 0.0;    // max |H0| on the outer ring / max |H0| on rho ~ 1
  RVector kappa_integrand;     // s1 |s|^{-gamma} Im H0 on {s1 > 0}, 0 elsewhere

  cplx u_at(std::size_t k) const { return 1.0 + h[static_cast<Eigen::Index>(k)]; }
  cplx h0_at(std::size_t k) const {
    return std::pow(grid.rho[k / grid.n_theta], -gamma) * u_at(k);
  }

  /// H0 at a point (s1, |s'|), bilinear in (xi, theta); rho is clamped to the grid.
  cplx evaluate(double s1, double s_perp = 0.0) const {
    const double r = std::hypot(s1, s_perp);
    if (grid.d == 1 && s1 < 0.0) return std::conj(evaluate(-s1, 0.0));
    const double rr = std::clamp(r, grid.rho.front(), grid.rho.back());
    const double fj = (grid.xi_of(rr) - grid.xi_in) / grid.h_xi - 0.5;
    const int j0 = std::clamp(static_cast<int>(std::floor(fj)), 0, grid.n_radial - 2);
    const double aj = std::clamp(fj - j0, 0.0, 1.0);
    int t0 = 0;
    double at = 0.0;
    if (grid.d > 1) {
      const double th = std::atan2(s_perp, s1);
      const double ft = th / grid.h_theta - 0.5;
      t0 = std::clamp(static_cast<int>(std::floor(ft)), 0, grid.n_theta - 2);
      at = std::clamp(ft - t0, 0.0, 1.0);
    }
    auto u = [&](int j, int t) { return u_at(grid.index(j, t)); };
    cplx val = (1.0 - aj) * u(j0, t0) + aj * u(j0 + 1, t0);
    if (grid.d > 1) {
      const cplx val2 = (1.0 - aj) * u(j0, t0 + 1) + aj * u(j0 + 1, t0 + 1);
      val = (1.0 - at) * val + at * val2;
    }
    return std::pow(rr, -gamma) * val;
  }
};

namespace detail {

// Calls fn(k, l, coefficient) for interior faces and fn(k, k, c0) for the
// Dirichlet inner face, with coefficients of the form int rho^{-2 gamma} |grad u|^2.
template <class Fn>
void for_each_rescaled_face(const RescaledGrid& g, double gamma, Fn&& fn) {
  const int d = g.d;
  const double sphere = d == 1 ? 1.0 : sphere_area(d - 2);
  const double pw = d - 1 - 2.0 * gamma;
  for (int t = 0; t < g.n_theta; ++t) {
    const double ang = d == 1 ? 1.0 : g.sin_pow(g.theta[t]) * g.h_theta;
    const double c0 = sphere * std::pow(g.rho_face[0], pw) / g.drho_face[0] * ang / (0.5 * g.h_xi);
    fn(g.index(0, t), g.index(0, t), c0);
    for (int j = 0; j + 1 < g.n_radial; ++j) {
      const double c = sphere * std::pow(g.rho_face[j + 1], pw) / g.drho_face[j + 1] * ang / g.h_xi;
      fn(g.index(j, t), g.index(j + 1, t), c);
    }
  }
  if (d == 1) return;
  const double pa = d - 3 - 2.0 * gamma;
  for (int j = 0; j < g.n_radial; ++j) {
    const double rad = sphere * std::pow(g.rho[j], pa) * g.drho[j] * g.h_xi;
    for (int t = 0; t + 1 < g.n_theta; ++t) {
      const double c = rad * g.sin_pow(g.theta_face[t + 1]) / g.h_theta;
      fn(g.index(j, t), g.index(j, t + 1), c);
    }
  }
}

}  // namespace detail

inline H0Solution solve_h0(const ModelParams& p, const RescaledOptions& opts = {}) {
  H0Solution sol;
  sol.grid = build_rescaled_grid(p, opts);
  sol.gamma = p.gamma;
  sol.include_drift = opts.include_drift;
  const RescaledGrid& g = sol.grid;
  const auto n = static_cast<Eigen::Index>(g.size());

  const double den = 6.0 * p.gamma - 2.0 * p.d - 4.0;
  const cplx lead = opts.include_drift && std::abs(den) > 1e-8 ? cplx(0.0, -1.0 / den) : cplx(0.0, 0.0);
  sol.h_inner.resize(g.n_theta);
  for (int t = 0; t < g.n_theta; ++t) sol.h_inner[t] = lead * std::pow(g.s_in, 3) * g.cos_theta(t);

  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(5 * g.size());
  CVector rhs = CVector::Zero(n);
  detail::for_each_rescaled_face(g, p.gamma, [&](std::size_t k, std::size_t l, double c) {
    trip.emplace_back(k, k, c);
    if (k == l) {
      rhs[static_cast<Eigen::Index>(k)] += c * sol.h_inner[k % g.n_theta];
      return;
    }
    trip.emplace_back(l, l, c);
    trip.emplace_back(k, l, -c);
    trip.emplace_back(l, k, -c);
  });
  if (opts.include_drift) {
    for (int j = 0; j < g.n_radial; ++j) {
      for (int t = 0; t < g.n_theta; ++t) {
        const std::size_t k = g.index(j, t);
        const double wk = g.volume[k] * std::pow(g.rho[j], -2.0 * p.gamma);
        const cplx diag(0.0, wk * g.rho[j] * g.cos_theta(t));
        trip.emplace_back(k, k, diag);
        rhs[k] -= diag;
      }
    }
  }
  SparseC a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  Eigen::SparseLU<SparseC> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success)
    throw FactorizationError("limit problem matrix is singular; refine the grid near s_in");
  sol.h = lu.solve(rhs);
  const double rn = rhs.norm();
  sol.residual = rn > 0.0 ? (a * sol.h - rhs).norm() / rn : (a * sol.h).norm();
  if (!sol.h.allFinite()) throw FactorizationError("limit problem solve produced non-finite values");

  double outer = 0.0, inner = 0.0;
  for (int t = 0; t < g.n_theta; ++t) outer = std::max(outer, std::abs(sol.h0_at(g.index(g.n_radial - 1, t))));
  const auto j1 = static_cast<int>(std::lower_bound(g.rho.begin(), g.rho.end(), 1.0) - g.rho.begin());
  for (int t = 0; t < g.n_theta; ++t) inner = std::max(inner, std::abs(sol.h0_at(g.index(std::min(j1, g.n_radial - 1), t))));
  sol.outer_decay = outer / inner;

  sol.kappa_integrand = RVector::Zero(n);
  for (int j = 0; j < g.n_radial; ++j) {
    for (int t = 0; t < g.n_theta; ++t) {
      const double c = g.cos_theta(t);
      if (c <= 0.0) continue;
      const std::size_t k = g.index(j, t);
      sol.kappa_integrand[k] = g.rho[j] * c * std::pow(g.rho[j], -p.gamma) * sol.h0_at(k).imag();
    }
  }
  return sol;
}

struct KappaResult {
  double kappa = 0.0;             // half-space formula including the tail
  double kappa_truncated = 0.0;   // without the tail
  double kappa_full_space = 0.0;  // -C^2 int over all s, no symmetry used
  double tail = 0.0;              // estimated contribution beyond s_out
  double inner = 0.0;             // estimated contribution of |s| < s_in
  double tail_exponent = 0.0;     // fitted power of the radial integrand
};

namespace detail {

// Radial density of -2 C^2 s1 |s|^{-gamma} Im H0 per unit rho, restricted by `half`.
inline std::vector<double> radial_kappa_density(const H0Solution& s, const ModelParams& p, bool half) {
  const RescaledGrid& g = s.grid;
  std::vector<double> f(g.n_radial, 0.0);
  for (int j = 0; j < g.n_radial; ++j) {
    double acc = 0.0;
    for (int t = 0; t < g.n_theta; ++t) {
      const double c = g.cos_theta(t);
      if (half && c <= 0.0) continue;
      const std::size_t k = g.index(j, t);
      acc += g.volume[k] * g.rho[j] * c * std::pow(g.rho[j], -p.gamma) * s.h0_at(k).imag();
    }
    f[j] = acc / (g.drho[j] * g.h_xi);
  }
  return f;
}

}  // namespace detail

/// kappa = -2 C^2 int_{s1 > 0} s1 |s|^{-gamma} Im H0 ds, with a power-law tail.
inline KappaResult compute_kappa(const H0Solution& sol, const ModelParams& p,
                                 double max_tail_fraction = 0.01, double max_outer_decay = 1e-6) {
  if (!sol.include_drift) throw ParameterError("kappa needs the solution with the drift term");
  if (!(sol.outer_decay <= max_outer_decay))
    throw CoverageError("H0 has not decayed at s_out (ratio " + sci(sol.outer_decay) + "); increase s_out");
  const RescaledGrid& g = sol.grid;
  KappaResult r;
  const std::vector<double> f = detail::radial_kappa_density(sol, p, true);
  double integral = 0.0;
  for (int j = 0; j < g.n_radial; ++j) integral += f[j] * g.drho[j] * g.h_xi;
  r.kappa_truncated = -2.0 * p.c_beta_sq * integral;

  // tail: fit |f| ~ rho^q over the outer 20 % of the radial cells
  const int j0 = static_cast<int>(0.8 * g.n_radial);
  std::vector<double> xs, ys;
  for (int j = j0; j < g.n_radial; ++j) {
    if (std::abs(f[j]) > 0.0) {
      xs.push_back(g.rho[j]);
      ys.push_back(std::abs(f[j]));
    }
  }
  if (xs.size() >= 2) {
    const PowerLawFit pl = fit_power_law(xs, ys);
    r.tail_exponent = pl.exponent;
    const double fo = std::abs(f.back());
    r.tail = pl.exponent < -1.0 ? 2.0 * p.c_beta_sq * fo * g.rho.back() / (-pl.exponent - 1.0)
                                : std::numeric_limits<double>::infinity();
  }
  // near the origin Im u ~ rho^3 cos(theta), so the density goes like rho^{d+3-2 gamma}
  const double q = g.d + 3.0 - 2.0 * p.gamma;
  r.inner = -2.0 * p.c_beta_sq * f.front() * std::pow(g.s_in / g.rho.front(), q) * g.s_in / (q + 1.0);
  r.kappa = r.kappa_truncated + r.inner + (f.back() < 0.0 ? r.tail : -r.tail);

  double full = 0.0;
  if (g.d == 1) {
    // Im H0 is odd and s1 is odd, so the integral over R is twice the half-line
    full = 2.0 * integral;
  } else {
    const std::vector<double> ff = detail::radial_kappa_density(sol, p, false);
    for (int j = 0; j < g.n_radial; ++j) full += ff[j] * g.drho[j] * g.h_xi;
  }
  r.kappa_full_space = -p.c_beta_sq * full;

  if (!(r.kappa > 0.0))
    throw ConvergenceError("kappa = " + sci(r.kappa) + " is not positive; H0 is not converged");
  if (!(r.tail <= max_tail_fraction * r.kappa))
    throw CoverageError("kappa tail beyond s_out is " + sci(r.tail / r.kappa) +
                        " of kappa; increase s_out");
  return r;
}

/// int |grad(H0 / |s|^{-gamma})|^2 |s|^{-2 gamma} ds over all of R^d.
inline double dirichlet_form(const H0Solution& sol) {
  double e = 0.0;
  detail::for_each_rescaled_face(sol.grid, sol.gamma, [&](std::size_t k, std::size_t l, double c) {
    const cplx hk = sol.h[static_cast<Eigen::Index>(k)];
    const cplx hl = k == l ? sol.h_inner[k % sol.grid.n_theta] : sol.h[static_cast<Eigen::Index>(l)];
    e += c * std::norm(hk - hl);
  });
  return sol.grid.d == 1 ? 2.0 * e : e;
}

/// C^2 times the Dirichlet form, the quantity that equals kappa in the limit.
inline double dirichlet_kappa(const H0Solution& sol, const ModelParams& p) {
  return p.c_beta_sq * dirichlet_form(sol);
}

/// Smallest |h| ratio exponent near s_in: slope of log|h| against log rho over
/// the first `decades` decades above s_in.
inline double inner_branch_order(const H0Solution& sol, double decades = 2.0) {
  const RescaledGrid& g = sol.grid;
  std::vector<double> xs, ys;
  const double lo = 10.0 * g.s_in, hi = g.s_in * std::pow(10.0, decades + 1.0);
  for (int j = 0; j < g.n_radial; ++j) {
    if (g.rho[j] < lo || g.rho[j] > hi) continue;
    double m = 0.0;
    for (int t = 0; t < g.n_theta; ++t) m = std::max(m, std::abs(sol.h[static_cast<Eigen::Index>(g.index(j, t))]));
    if (m > 0.0) {
      xs.push_back(g.rho[j]);
      ys.push_back(m);
    }
  }
  if (xs.size() < 2) throw ParameterError("not enough cells near s_in to measure the branch");
  return fit_power_law(xs, ys).exponent;
}

/// Pointwise residual of [-Delta + gamma(gamma-d+2)/|s|^2 + i s1] H0 with
/// centred differences, max over cells with a <= rho <= b, relative to the
/// largest potential term there.
inline double h0_residual(const H0Solution& sol, const ModelParams& p, double a, double b) {
  const RescaledGrid& g = sol.grid;
  const double c = p.hardy_coefficient();
  const int d = g.d;
  double rmax = 0.0, scale = 0.0;
  auto H = [&](int j, int t) { return sol.h0_at(g.index(j, t)); };
  for (int j = 1; j + 1 < g.n_radial; ++j) {
    if (g.rho[j] < a || g.rho[j] > b) continue;
    const double xi = g.xi_in + (j + 0.5) * g.h_xi;
    const double r = g.rho[j], r1 = g.drho[j], r2 = g.d2rho_of(xi);
    const int t_lo = d == 1 ? 0 : 1, t_hi = d == 1 ? 1 : g.n_theta - 1;
    for (int t = t_lo; t < t_hi; ++t) {
      const cplx hx = (H(j + 1, t) - H(j - 1, t)) / (2.0 * g.h_xi);
      const cplx hxx = (H(j + 1, t) - 2.0 * H(j, t) + H(j - 1, t)) / (g.h_xi * g.h_xi);
      const cplx hr = hx / r1;
      const cplx hrr = (hxx - r2 / r1 * hx) / (r1 * r1);
      cplx lap = hrr + (d - 1.0) / r * hr;
      if (d > 1) {
        const cplx ht = (H(j, t + 1) - H(j, t - 1)) / (2.0 * g.h_theta);
        const cplx htt = (H(j, t + 1) - 2.0 * H(j, t) + H(j, t - 1)) / (g.h_theta * g.h_theta);
        lap += (htt + (d - 2.0) / std::tan(g.theta[t]) * ht) / (r * r);
      }
      const cplx pot = c / (r * r) * H(j, t);
      const double drift = sol.include_drift ? 1.0 : 0.0;
      const cplx res = -lap + pot + cplx(0.0, drift * r * g.cos_theta(t)) * H(j, t);
      rmax = std::max(rmax, std::abs(res));
      scale = std::max(scale, std::abs(pot));
    }
  }
  return scale > 0.0 ? rmax / scale : rmax;
}

/// Roots of k(k + d - 2) = gamma(gamma - d + 2): the two radial branches |s|^k at 0.
inline std::array<double, 2> indicial_exponents(const ModelParams& p) {
  return {-p.gamma, p.gamma - p.d + 2.0};
}

/// |s|_eta^{-gamma} = (eta^{2/3} + |s|^2)^{-gamma/2}.
inline double regularized_weight(const ModelParams& p, double eta, double s_sq) {
  return std::pow(std::pow(eta, 2.0 / 3.0) + s_sq, -p.gamma / 2.0);
}

/// Phi_eta(s) = Phi(eta^{-1/3} s) = c_phi eta^{(gamma+2)/3} |s|_eta^{-gamma-2}.
inline double rescaled_penalty(const ModelParams& p, double eta, double s_sq) {
  return p.c_phi * std::pow(eta, (p.gamma + 2.0) / 3.0) *
         std::pow(std::pow(eta, 2.0 / 3.0) + s_sq, -(p.gamma + 2.0) / 2.0);
}

struct RescaleDeviation {
  double eta = 0.0;
  double deviation = 0.0;  // relative L2 gap of Im H_eta and Im H0 on the annulus
};

/// Compares H_eta(s) = eta^{-gamma/3} M_{0,eta}(eta^{-1/3} s) against H0 on
/// s_lo <= |s| <= s_hi (defaults: s_in and s_out / 2).
inline std::vector<RescaleDeviation> rescale_consistency(PenalizedSolver& solver, const H0Solution& h0,
                                                         const std::vector<double>& etas,
                                                         double s_lo = 0.0, double s_hi = 0.0) {
  const ModelParams& p = solver.params();
  const Grid& g = solver.grid();
  if (s_lo <= 0.0) s_lo = h0.grid.s_in;
  if (s_hi <= 0.0) s_hi = 0.5 * h0.grid.s_out;
  std::vector<RescaleDeviation> out;
  for (double eta : etas) {
    if (!(eta > 0.0)) throw ParameterError("rescale consistency needs eta > 0");
    const double e13 = std::cbrt(eta);
    if (g.v1_max * e13 < s_hi * (1.0 - 1e-12) ||
        (g.geometry == Geometry::Axisym && g.r_max * e13 < s_hi * (1.0 - 1e-12)))
      throw CoverageError("velocity grid does not cover |s| <= " + std::to_string(s_hi) +
                          " at eta = " + std::to_string(eta));
    if (g.v1_max < required_v1_max(eta) * (1.0 - 1e-12))
      throw CoverageError("velocity grid does not cover 8 eta^{-1/3} at eta = " + std::to_string(eta));
    const PenalizedSolution m = solver.solve(eta, 0.0);
    const double pref = std::pow(eta, -p.gamma / 3.0);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double s1 = e13 * g.v1_at(k), sp = e13 * g.r_at(k);
      const double r = std::hypot(s1, sp);
      if (r < s_lo || r > s_hi) continue;
      const double a = (pref * m.values[static_cast<Eigen::Index>(k)]).imag();
      const double b = h0.evaluate(s1, sp).imag();
      num += g.weights[k] * (a - b) * (a - b);
      den += g.weights[k] * b * b;
    }
    out.push_back({eta, den > 0.0 ? std::sqrt(num / den) : 0.0});
  }
  return out;
}

/// int |grad(H_eta / |s|_eta^{-gamma})|^2 |s|_eta^{-2 gamma} ds for
/// H_eta(s) = eta^{-gamma/3} M_{0,eta}(eta^{-1/3} s); equals eta^{-alpha} times the
/// velocity-space Dirichlet form of M_{0,eta}.
inline double rescaled_dirichlet_form(PenalizedSolver& solver, double eta) {
  if (!(eta > 0.0)) throw ParameterError("rescaled Dirichlet form needs eta > 0");
  const ModelParams& p = solver.params();
  const PenalizedSolution m = solver.solve(eta, 0.0);
  const double e = weighted_dirichlet(solver.grid(), m.values,
                                      [&](double a, double b) { return equilibrium_m(p, a, b); });
  return std::pow(eta, -p.alpha) * e;
}

struct ProfileRow {
  double s = 0.0;
  cplx h0{0.0, 0.0};
  double integrand = 0.0;
};

/// Radial profile along the positive s1 axis (theta closest to 0 for d >= 2).
inline std::vector<ProfileRow> radial_profile(const H0Solution& sol) {
  std::vector<ProfileRow> rows;
  rows.reserve(sol.grid.n_radial);
  for (int j = 0; j < sol.grid.n_radial; ++j) {
    const std::size_t k = sol.grid.index(j, 0);
    rows.push_back({sol.grid.rho[j], sol.h0_at(k), sol.kappa_integrand[static_cast<Eigen::Index>(k)]});
  }
  return rows;
}

}  // namespace anomfp
