#pragma once

// One spatial Fourier mode of the rescaled kinetic equation
//   theta(eps) d/dt g = -L_eta g,   eta = eps |xi|,   theta = eps^alpha,
// for the symmetrized unknown g = f^ / F^{1/2}, integrated with the trapezoidal rule.

#include <cmath>
#include <complex>
#include <memory>
#include <vector>

#include <Eigen/SparseLU>

#include "anomfp/eigen.hpp"
#include "anomfp/error.hpp"
#include "anomfp/grid.hpp"
#include "anomfp/model.hpp"
#include "anomfp/operator.hpp"
#include "anomfp/penalized.hpp"

namespace anomfp {

struct KineticOptions {
  int n_samples = 50;
  bool estimate_error = true;
  double error_tolerance = 1e-6;  // bound on the step-halving estimate, relative to |rho^(0)|
  bool keep_snapshots = false;
  Stencil stencil = Stencil::Conservative;
};

struct FourierModeRun {
  double xi = 0.0;
  double epsilon = 0.0;
  double theta = 0.0;
  double eta = 0.0;
  int n_steps = 0;
  CVector g;                       // final state
  std::vector<double> times;
  std::vector<cplx> rho_hat;       // C_beta int g M dv
  std::vector<double> l2_norms;
  std::vector<CVector> snapshots;  // g at the sampled times, when kept
  double error_estimate = 0.0;     // step-halving estimate for rho_hat
};

/// rho^(t) = C_beta int g M dv.
inline cplx density_mode(const Grid& g, const ModelParams& p, const RVector& m_eq, const CVector& u) {
  cplx s{0.0, 0.0};
  for (std::size_t k = 0; k < g.size(); ++k) s += g.weights[k] * u[static_cast<Eigen::Index>(k)] * m_eq[static_cast<Eigen::Index>(k)];
  return p.c_beta() * s;
}

/// g0 = rho0 M (1 + bump e^{-|v|^2}).
inline CVector well_prepared(const Grid& g, const ModelParams& p, cplx rho0 = 1.0, double bump = 0.0) {
  CVector out(static_cast<Eigen::Index>(g.size()));
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double v2 = g.speed_sq_at(k);
    out[static_cast<Eigen::Index>(k)] = rho0 * equilibrium_m_sq(p, v2) * (1.0 + bump * std::exp(-v2));
  }
  return out;
}

namespace detail {

struct CnTrace {
  std::vector<double> times;
  std::vector<CVector> states;
};

inline CnTrace crank_nicolson(const OperatorMatrix& op, double tau, double dt, const CVector& g0,
                              int n_steps, int sample_every) {
  const Eigen::Index n = op.dim();
  SparseC lhs = op.weighted * cplx(tau, 0.0);
  SparseC rhs_op = op.weighted * cplx(-tau, 0.0);
  for (Eigen::Index k = 0; k < n; ++k) {
    lhs.coeffRef(k, k) += op.weights[k];
    rhs_op.coeffRef(k, k) += op.weights[k];
  }
  lhs.makeCompressed();
  Eigen::SparseLU<SparseC> lu;
  lu.compute(lhs);
  if (lu.info() != Eigen::Success) throw FactorizationError("time-step matrix factorization failed");
  CnTrace tr;
  CVector u = g0;
  tr.times.push_back(0.0);
  tr.states.push_back(u);
  for (int s = 1; s <= n_steps; ++s) {
    u = lu.solve(rhs_op * u);
    if (lu.info() != Eigen::Success || !u.allFinite()) throw FactorizationError("time step failed");
    if (s % sample_every == 0 || s == n_steps) {
      tr.times.push_back(s * dt);
      tr.states.push_back(u);
    }
  }
  return tr;
}

}  // namespace detail

/// Trapezoidal steps of dg/dt = -theta^{-1} L_eta g, eta = eps |xi| (negative xi
/// reverses the drift).  With estimate_error, a second run at half the step
/// size gives an estimate of the rho^ error of this run.
inline FourierModeRun evolve_mode(const Grid& grid, const ModelParams& p, double xi, double epsilon,
                                  const CVector& g0, double t_end, int n_steps,
                                  const KineticOptions& opts = {}) {
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
  if (!(t_end > 0.0) || n_steps < 1) throw ParameterError("need t_end > 0 and n_steps >= 1");
  if (g0.size() != static_cast<Eigen::Index>(grid.size())) throw ParameterError("g0 is not on the grid");
  FourierModeRun run;
  run.xi = xi;
  run.epsilon = epsilon;
  run.theta = std::pow(epsilon, p.alpha);
  run.eta = epsilon * std::abs(xi);
  run.n_steps = n_steps;
  const AssemblyOptions ao{Potential::Full, opts.stencil, xi < 0.0 ? Drift::Reversed : Drift::Forward};
  const OperatorMatrix op = assemble(grid, p, run.eta, 0.0, ao);
  const RVector m_eq = sample_equilibrium(grid, p);

  const int every = std::max(1, n_steps / std::max(1, opts.n_samples));
  const double dt = t_end / n_steps;
  detail::CnTrace tr = detail::crank_nicolson(op, dt / (2.0 * run.theta), dt, g0, n_steps, every);
  run.times = tr.times;
  for (const CVector& u : tr.states) {
    run.rho_hat.push_back(density_mode(grid, p, m_eq, u));
    run.l2_norms.push_back(l2_norm(u, grid));
  }
  run.g = tr.states.back();
  if (opts.keep_snapshots) run.snapshots = std::move(tr.states);

  if (opts.estimate_error) {
    const detail::CnTrace fine = detail::crank_nicolson(op, dt / (4.0 * run.theta), dt / 2.0, g0,
                                                        2 * n_steps, 2 * every);
    double diff = 0.0;
    for (std::size_t i = 0; i < run.times.size() && i < fine.times.size(); ++i)
      diff = std::max(diff, std::abs(run.rho_hat[i] - density_mode(grid, p, m_eq, fine.states[i])));
    const double scale = std::max(std::abs(run.rho_hat.front()), 1e-300);
    run.error_estimate = 4.0 / 3.0 * diff / scale;
    if (opts.error_tolerance > 0.0 && run.error_estimate > opts.error_tolerance)
      throw ConvergenceError("time step too large: rho error estimate " + sci(run.error_estimate) +
                             " exceeds " + sci(opts.error_tolerance) + "; increase n_steps");
  }
  return run;
}

/// e^{-kappa |xi|^alpha t} rho0.
inline cplx fractional_reference(double xi, double t, cplx rho0, double kappa, double alpha) {
  if (!(kappa > 0.0)) throw ParameterError("kappa must be positive");
  if (xi == 0.0) return rho0;
  return std::exp(-kappa * std::pow(std::abs(xi), alpha) * t) * rho0;
}

struct LimitRow {
  double epsilon = 0.0;
  double theta = 0.0;
  double eta = 0.0;
  double error = 0.0;            // max_t |rho^eps(t) - reference(t)|
  double error_estimate = 0.0;   // integrator estimate for the run
  cplx mu{0.0, 0.0};             // eigenvalue at eta
  cplx rate_fitted{0.0, 0.0};    // decay rate of the eigen-projection
  cplx rate_expected{0.0, 0.0};  // eps^{-alpha} mu(eps |xi|)
  double rate_mismatch = 0.0;    // relative
  FourierModeRun run;
};

struct LimitTable {
  double xi = 0.0;
  double kappa = 0.0;
  double alpha = 0.0;
  std::vector<LimitRow> rows;

  bool strictly_decreasing() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (!(rows[i].error < rows[i - 1].error)) return false;
    return true;
  }
  double max_rate_mismatch() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, r.rate_mismatch);
    return m;
  }
};

/// Runs the mode for every eps and compares rho^ with the fractional heat
/// semigroup; also fits the decay of F^(t) = C_beta sum w g M_eta (bilinear
/// pairing with the eigenfunction) against eps^{-alpha} mu(eps |xi|).
inline LimitTable limit_comparison(std::shared_ptr<const Grid> grid, const ModelParams& p, double xi,
                                   const std::vector<double>& eps_list, const CVector& g0, double t_end,
                                   double kappa, int n_steps, KineticOptions opts = {},
                                   const RootOptions& root = {}) {
  if (eps_list.empty()) throw ParameterError("empty epsilon list");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1])) throw ParameterError("epsilon list must be decreasing");
  if (!(kappa > 0.0)) throw ParameterError("kappa must be positive");
  LimitTable table;
  table.xi = xi;
  table.kappa = kappa;
  table.alpha = p.alpha;
  opts.keep_snapshots = xi != 0.0;
  PenalizedSolver solver(grid, p);
  const Drift drift = xi < 0.0 ? Drift::Reversed : Drift::Forward;
  cplx guess{0.0, 0.0};
  double eta_prev = 0.0;
  for (double eps : eps_list) {
    LimitRow row;
    row.run = evolve_mode(*grid, p, xi, eps, g0, t_end, n_steps, opts);
    row.epsilon = eps;
    row.theta = row.run.theta;
    row.eta = row.run.eta;
    row.error_estimate = row.run.error_estimate;
    const cplx rho0 = row.run.rho_hat.front();
    for (std::size_t i = 0; i < row.run.times.size(); ++i)
      row.error = std::max(row.error, std::abs(row.run.rho_hat[i] -
                                               fractional_reference(xi, row.run.times[i], rho0, kappa, p.alpha)));
    if (xi != 0.0) {
      if (eta_prev > 0.0)
        guess *= std::pow(row.eta / eta_prev, p.alpha - 2.0 / 3.0);
      else
        guess = first_order_seed(solver, row.eta, drift);
      const EigenResult er = find_lambda(solver, row.eta, guess, drift, root);
      guess = er.lambda_tilde;
      eta_prev = row.eta;
      row.mu = er.mu;
      row.rate_expected = er.mu / row.theta;
      // log-linear least squares through the origin in t for log(F(t)/F(0))
      std::vector<cplx> proj;
      for (const CVector& u : row.run.snapshots) {
        cplx s{0.0, 0.0};
        for (std::size_t k = 0; k < grid->size(); ++k)
          s += grid->weights[k] * u[static_cast<Eigen::Index>(k)] * er.eigenfunction[static_cast<Eigen::Index>(k)];
        proj.push_back(p.c_beta() * s);
      }
      double stt = 0.0;
      cplx sty{0.0, 0.0};
      for (std::size_t i = 1; i < proj.size(); ++i) {
        const double t = row.run.times[i];
        stt += t * t;
        sty += t * std::log(proj[i] / proj.front());
      }
      row.rate_fitted = -sty / stt;
      row.rate_mismatch = std::abs(row.rate_fitted - row.rate_expected) / std::abs(row.rate_expected);
      row.run.snapshots.clear();
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace anomfp
