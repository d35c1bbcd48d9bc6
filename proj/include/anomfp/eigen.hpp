#pragma once

// Root finding on the constraint B(lambda, eta) = eta^{-2/3} <M_{lambda,eta} - M, Phi>
// and the power-law fit of mu(eta) = eta^{2/3} lambda~(eta).

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anomfp/error.hpp"
#include "anomfp/penalized.hpp"

namespace anomfp {

struct RootOptions {
  double tolerance = 1e-10;   // on |B|
  int max_iterations = 25;
  double fd_step = 1e-5;      // for the Newton fallback and derivative probes
  bool polish = true;         // keep stepping while |B| still halves
};

struct ConstraintValue {
  cplx value{0.0, 0.0};   // eta^{-2/3} b_direct
  cplx moment{0.0, 0.0};  // eta^{-2/3} b_integral
  PenalizedSolution solution;
};

inline ConstraintValue eval_constraint(PenalizedSolver& solver, double eta, cplx lambda,
                                       Drift drift = Drift::Forward) {
  if (!(eta > 0.0)) throw ParameterError("constraint needs eta > 0");
  ConstraintValue c;
  c.solution = solver.solve(eta, lambda, drift);
  const double scale = std::pow(eta, -2.0 / 3.0);
  c.value = scale * c.solution.b_direct;
  c.moment = scale * c.solution.b_integral;
  return c;
}

/// Centered difference of B along the real lambda axis.
inline cplx constraint_derivative(PenalizedSolver& solver, double eta, cplx lambda = 0.0,
                                  double step = 1e-4, Drift drift = Drift::Forward) {
  const cplx bp = eval_constraint(solver, eta, lambda + step, drift).value;
  const cplx bm = eval_constraint(solver, eta, lambda - step, drift).value;
  return (bp - bm) / (2.0 * step);
}

/// First-order seed -B(0, eta) / int M_{0,eta} M.
inline cplx first_order_seed(PenalizedSolver& solver, double eta, Drift drift = Drift::Forward) {
  const ConstraintValue c = eval_constraint(solver, eta, 0.0, drift);
  const cplx mass = pairing(c.solution.values, solver.equilibrium(), solver.grid());
  return -c.value / mass;
}

struct EigenResult {
  double eta = 0.0;
  Drift drift = Drift::Forward;
  cplx lambda_tilde{0.0, 0.0};
  cplx mu{0.0, 0.0};
  double eigen_residual = 0.0;       // ||L_eta m - mu m|| / ||m||
  double constraint_residual = 0.0;  // |B(lambda~, eta)|
  int iterations = 0;
  CVector eigenfunction;
  std::vector<cplx> trace;  // lambda iterates
};

/// ||L_eta m - mu m||_2 / ||m||_2 with the unpenalized operator.
inline double eigen_residual(const PenalizedSolver& solver, const CVector& m, double eta, cplx mu,
                             Drift drift = Drift::Forward) {
  const OperatorMatrix op = solver.operator_at(eta, 0.0, drift);
  const CVector r = op.apply(m) - mu * m;
  return l2_norm(r, solver.grid()) / l2_norm(m, solver.grid());
}

namespace detail {

inline std::string format_trace(const std::vector<cplx>& trace) {
  std::ostringstream os;
  os.precision(6);
  for (const cplx& z : trace) os << " (" << z.real() << ", " << z.imag() << ")";
  return os.str();
}

}  // namespace detail

/// Complex secant iteration on lambda -> B(lambda, eta) with a finite-difference
/// Newton step whenever the secant slope degenerates.
inline EigenResult find_lambda(PenalizedSolver& solver, double eta, cplx guess,
                               Drift drift = Drift::Forward, const RootOptions& opts = {}) {
  if (!(eta > 0.0)) throw ParameterError("find_lambda needs eta > 0");
  const double radius = solver.options().lambda_radius;
  if (std::abs(guess) > radius) throw ParameterError("initial guess outside the search ball");

  EigenResult res;
  res.eta = eta;
  res.drift = drift;

  auto inside = [&](cplx z) {
    if (std::abs(z) <= radius && std::isfinite(z.real()) && std::isfinite(z.imag())) return;
    throw ConvergenceError("lambda iterate left the ball |lambda| <= " + std::to_string(radius) +
                           " at eta = " + std::to_string(eta) + "; trace:" +
                           detail::format_trace(res.trace));
  };

  cplx x0 = guess;
  ConstraintValue c0 = eval_constraint(solver, eta, x0, drift);
  res.trace.push_back(x0);
  cplx f0 = c0.value;
  ConstraintValue best = c0;
  cplx best_x = x0;

  cplx x1, f1;
  ConstraintValue c1;
  if (std::abs(f0) <= opts.tolerance && !opts.polish) {
    x1 = x0;
    c1 = c0;
  } else {
    // second point of the secant pair: one Newton-like step with slope int M^2
    const double slope = 1.0 / solver.params().c_beta_sq;
    x1 = x0 - f0 / slope;
    if (std::abs(x1) > radius) x1 = x0 * 0.5;
    inside(x1);
    c1 = eval_constraint(solver, eta, x1, drift);
    res.trace.push_back(x1);
  }
  f1 = c1.value;
  int iterations = 1;
  if (std::abs(f1) < std::abs(best.value)) {
    best = c1;
    best_x = x1;
  }

  bool converged = std::abs(best.value) <= opts.tolerance;
  while (iterations < opts.max_iterations) {
    if (converged && !opts.polish) break;
    cplx step;
    const cplx df = f1 - f0;
    if (std::abs(df) > 1e-14 * (std::abs(f1) + std::abs(f0)) && x1 != x0) {
      step = f1 * (x1 - x0) / df;
    } else {
      const double h = opts.fd_step;
      const cplx dp = eval_constraint(solver, eta, x1 + h, drift).value;
      const cplx dm = eval_constraint(solver, eta, x1 - h, drift).value;
      const cplx deriv = (dp - dm) / (2.0 * h);
      if (deriv == cplx(0.0, 0.0)) break;
      step = f1 / deriv;
    }
    if (step == cplx(0.0, 0.0)) break;
    const cplx x2 = x1 - step;
    inside(x2);
    ConstraintValue c2 = eval_constraint(solver, eta, x2, drift);
    res.trace.push_back(x2);
    ++iterations;
    const double prev_best = std::abs(best.value);
    const bool improved = std::abs(c2.value) < prev_best;
    if (improved) {
      best = c2;
      best_x = x2;
    }
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = c2.value;
    if (converged) {
      // polishing: stop once the decrease falls below a factor 2
      if (!(std::abs(c2.value) < 0.5 * prev_best)) break;
    }
    converged = std::abs(best.value) <= opts.tolerance;
  }

  if (!converged)
    throw ConvergenceError("root finder did not reach |B| <= " + std::to_string(opts.tolerance) +
                           " within " + std::to_string(opts.max_iterations) +
                           " iterations at eta = " + std::to_string(eta) + " (|B| = " +
                           std::to_string(std::abs(best.value)) + "); trace:" +
                           detail::format_trace(res.trace));

  res.lambda_tilde = best_x;
  res.mu = std::pow(eta, 2.0 / 3.0) * best_x;
  res.constraint_residual = std::abs(best.value);
  res.iterations = iterations;
  res.eigenfunction = std::move(best.solution.values);
  res.eigen_residual = eigen_residual(solver, res.eigenfunction, eta, res.mu, drift);
  return res;
}

/// Eigen-couple at eta = 0: mu = 0 with eigenfunction M.
inline EigenResult trivial_eigen(const PenalizedSolver& solver) {
  EigenResult res;
  res.eigenfunction = solver.equilibrium().cast<cplx>();
  res.eigen_residual = eigen_residual(solver, res.eigenfunction, 0.0, 0.0);
  return res;
}

struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double r_squared = 0.0;
};

/// Least-squares fit of log y = log c + a log x.
inline PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("power-law fit needs >= 2 pairs");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw ParameterError("power-law fit needs positive data");
    a(i, 0) = 1.0;
    a(i, 1) = std::log(x[i]);
    b[i] = std::log(y[i]);
  }
  const Eigen::Vector2d c = a.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd r = b - a * c;
  const double mean = b.mean();
  const double ss_tot = (b.array() - mean).square().sum();
  PowerLawFit f;
  f.prefactor = std::exp(c[0]);
  f.exponent = c[1];
  f.r_squared = ss_tot > 0.0 ? 1.0 - r.squaredNorm() / ss_tot : 1.0;
  return f;
}

struct ScalingFit {
  std::vector<double> etas;
  std::vector<cplx> mus;
  double alpha_fit = 0.0;
  double kappa_loglog = 0.0;  // exp(intercept) of the log-log fit
  double kappa_fit = 0.0;     // eta -> 0 limit of Re mu eta^{-alpha}
  double r_squared = 0.0;
  double correction_exponent = 0.0;
  std::vector<double> deviations;  // |log Re mu - fitted line|
  std::size_t window_begin = 0;    // fitted points are [window_begin, etas.size())
  bool window_trimmed = false;
};

/// Fits Re mu against eta.  alpha_ref is the exponent used to form
/// Re mu eta^{-alpha_ref} = kappa + c1 x + c2 x^2 with x = eta^q, whose
/// intercept is kappa_fit.  Input ordered from the largest eta down.
inline ScalingFit fit_scaling(const std::vector<double>& etas, const std::vector<cplx>& mus,
                              double alpha_ref, double q) {
  if (etas.size() != mus.size() || etas.size() < 3)
    throw ParameterError("scaling fit needs >= 3 points");
  ScalingFit fit;
  fit.etas = etas;
  fit.mus = mus;
  fit.correction_exponent = q;
  std::vector<double> re(mus.size());
  for (std::size_t i = 0; i < mus.size(); ++i) re[i] = mus[i].real();

  auto loglog = [&](std::size_t begin) {
    return fit_power_law(std::vector<double>(etas.begin() + begin, etas.end()),
                         std::vector<double>(re.begin() + begin, re.end()));
  };
  PowerLawFit pl = loglog(0);
  fit.deviations.resize(etas.size());
  for (std::size_t i = 0; i < etas.size(); ++i)
    fit.deviations[i] = std::abs(std::log(re[i]) - std::log(pl.prefactor) - pl.exponent * std::log(etas[i]));
  std::vector<double> sorted = fit.deviations;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  const std::size_t third = etas.size() / 3;
  bool trim = false;
  for (std::size_t i = 0; i < third; ++i)
    if (fit.deviations[i] > 2.0 * median) trim = true;
  if (trim && etas.size() - third >= 3) {
    fit.window_begin = third;
    fit.window_trimmed = true;
    pl = loglog(third);
  }
  fit.alpha_fit = pl.exponent;
  fit.kappa_loglog = pl.prefactor;
  fit.r_squared = pl.r_squared;

  const std::size_t m = etas.size() - fit.window_begin;
  const int cols = m >= 5 ? 3 : 2;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(m), cols);
  Eigen::VectorXd b(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t k = fit.window_begin + i;
    const double x = std::pow(etas[k], q);
    a(i, 0) = 1.0;
    a(i, 1) = x;
    if (cols == 3) a(i, 2) = x * x;
    b[i] = re[k] * std::pow(etas[k], -alpha_ref);
  }
  fit.kappa_fit = a.colPivHouseholderQr().solve(b)[0];
  return fit;
}

struct SweepResult {
  std::vector<EigenResult> points;
  ScalingFit fit;
  bool complete = false;
  std::string failure;  // message of the aborting error, if any
};

/// Continuation sweep over decreasing eta.  A failing point stops the sweep and
/// the points computed so far are returned with complete = false.
inline SweepResult scaling_sweep(PenalizedSolver& solver, const std::vector<double>& etas,
                                 const RootOptions& opts = {}, bool require_coverage = true) {
  if (etas.size() < 5) throw ParameterError("scaling sweep needs >= 5 eta values");
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (!(etas[i] > 0.0)) throw ParameterError("sweep eta values must be positive");
    if (i > 0 && !(etas[i] < etas[i - 1])) throw ParameterError("sweep eta values must decrease");
  }
  const double eta_min = etas.back();
  if (require_coverage && solver.grid().v1_max < required_v1_max(eta_min) * (1.0 - 1e-12))
    throw CoverageError("grid v1_max = " + std::to_string(solver.grid().v1_max) +
                        " does not cover 8 eta^{-1/3} = " + std::to_string(required_v1_max(eta_min)));
  const ModelParams& p = solver.params();
  const double radius = solver.options().lambda_radius;
  SweepResult out;
  try {
    cplx guess = first_order_seed(solver, etas.front());
    for (std::size_t i = 0; i < etas.size(); ++i) {
      if (i > 0) {
        guess = out.points.back().lambda_tilde * std::pow(etas[i] / etas[i - 1], p.alpha - 2.0 / 3.0);
      }
      if (std::abs(guess) > radius) guess *= 0.99 * radius / std::abs(guess);
      out.points.push_back(find_lambda(solver, etas[i], guess, Drift::Forward, opts));
    }
  } catch (const Error& e) {
    out.failure = e.what();
    return out;
  }
  out.complete = true;
  std::vector<cplx> mus;
  for (const auto& r : out.points) mus.push_back(r.mu);
  out.fit = fit_scaling(etas, mus, p.alpha, p.correction_exponent());
  return out;
}

/// n log-spaced values from eta_max down to eta_min.
inline std::vector<double> log_spaced(double eta_max, double eta_min, int n) {
  if (!(eta_max > eta_min && eta_min > 0.0) || n < 2) throw ParameterError("invalid eta range");
  std::vector<double> v(n);
  const double a = std::log(eta_max), b = std::log(eta_min);
  for (int i = 0; i < n; ++i) v[i] = std::exp(a + (b - a) * i / (n - 1));
  v.front() = eta_max;
  v.back() = eta_min;
  return v;
}

}  // namespace anomfp
