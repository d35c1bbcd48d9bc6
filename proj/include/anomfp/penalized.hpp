#pragma once

// Penalized equation
//   [L_eta - lambda eta^{2/3}] m + <m - M, Phi> Phi = 0,
// i.e. (A + Phi Phi^*) m = <M, Phi> Phi with A the assembled operator.
//
// Two solution paths.  The bordered system
//   [ K        W Phi ] [m]   [<M,Phi> W Phi]
//   [ (W Phi)^T  -1  ] [c] = [      0      ]
// stays well conditioned where A itself is singular: at eta = 0 (A M = 0) and at
// the root lambda~ of the constraint, where mu = eta^{2/3} lambda~ is an exact
// eigenvalue of L_eta.  The Sherman-Morrison path (two solves with one LU of A)
// is kept for comparison away from those points.

#include <cmath>
#include <complex>
#include <memory>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "anomfp/error.hpp"
#include "anomfp/grid.hpp"
#include "anomfp/model.hpp"
#include "anomfp/operator.hpp"

namespace anomfp {

enum class SolveMethod { Bordered, ShermanMorrison };

struct SolverOptions {
  double lambda_radius = 0.5;
  /// Below this |delta lambda| eta^{2/3} a cached factorization is reused with
  /// iterative refinement instead of refactoring.
  double refactor_tolerance = 1e-9;
  double cross_check_abs = 1e-10;
  double cross_check_rel = 1e-6;
  double residual_tolerance = 1e-9;
  Stencil stencil = Stencil::Conservative;
  SolveMethod method = SolveMethod::Bordered;
};

struct PenalizedSolution {
  CVector values;
  double eta = 0.0;
  cplx lambda{0.0, 0.0};
  Drift drift = Drift::Forward;
  cplx b_direct{0.0, 0.0};    // <m - M, Phi>
  cplx b_integral{0.0, 0.0};  // eta^{2/3} int (lambda - i eta^{1/3} v1) m M / <M, Phi>
  double linear_residual = 0.0;
  bool coverage_ok = true;    // v1_max >= 8 eta^{-1/3}
  SolveMethod method = SolveMethod::Bordered;
  std::shared_ptr<const Grid> grid;
};

class PenalizedSolver {
 public:
  PenalizedSolver(std::shared_ptr<const Grid> grid, const ModelParams& params,
                  SolverOptions opts = {})
      : grid_(std::move(grid)), params_(params), opts_(opts) {
    if (!grid_) throw ParameterError("penalized solver needs a grid");
    if (grid_->d != params_.d) throw ParameterError("grid dimension does not match the model");
    if (!(opts_.lambda_radius > 0.0) || !(opts_.residual_tolerance > 0.0) ||
        !(opts_.cross_check_abs >= 0.0) || !(opts_.cross_check_rel >= 0.0))
      throw ParameterError("solver tolerances must be positive");
    m_ = sample_equilibrium(*grid_, params_);
    phi_ = sample_penalty(*grid_, params_);
    w_ = Eigen::Map<const RVector>(grid_->weights.data(), static_cast<Eigen::Index>(grid_->size()));
    phi_mass_ = (w_.array() * m_.array() * phi_.array()).sum();
  }

  const Grid& grid() const { return *grid_; }
  std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
  const ModelParams& params() const { return params_; }
  const SolverOptions& options() const { return opts_; }
  const RVector& equilibrium() const { return m_; }
  const RVector& penalty() const { return phi_; }
  /// Discrete <M, Phi>; equals 1 up to truncation and quadrature error.
  double phi_mass() const { return phi_mass_; }
  int factorizations() const { return factorizations_; }

  OperatorMatrix operator_at(double eta, cplx lambda, Drift drift, Potential pot = Potential::Full) const {
    return assemble(*grid_, params_, eta, lambda, {pot, opts_.stencil, drift});
  }

  PenalizedSolution solve(double eta, cplx lambda, Drift drift = Drift::Forward) {
    return solve_with(opts_.method, eta, lambda, drift);
  }

  PenalizedSolution solve_with(SolveMethod method, double eta, cplx lambda,
                               Drift drift = Drift::Forward) {
    if (eta < 0.0) throw ParameterError("eta must be >= 0");
    if (std::abs(lambda) > opts_.lambda_radius * (1.0 + 1e-12))
      throw ParameterError("|lambda| = " + std::to_string(std::abs(lambda)) +
                           " exceeds the search radius " + std::to_string(opts_.lambda_radius));
    if (eta == 0.0) method = SolveMethod::Bordered;
    const auto n = static_cast<Eigen::Index>(grid_->size());
    const CVector wphi = (w_.array() * phi_.array()).cast<cplx>();

    if (method == SolveMethod::ShermanMorrison) {
      std::vector<CVector> ys;
      if (solve_cached(false, eta, lambda, drift, {phi_mass_ * wphi, wphi}, ys)) {
        const cplx c1 = dot_phi(ys[0]);
        const cplx c2 = dot_phi(ys[1]);
        CVector m = ys[0] - (c1 / (1.0 + c2)) * ys[1];
        return finish(std::move(m), eta, lambda, drift, SolveMethod::ShermanMorrison);
      }
    }
    CVector rhs = CVector::Zero(n + 1);
    rhs.head(n) = phi_mass_ * wphi;
    std::vector<CVector> ys;
    if (!solve_cached(true, eta, lambda, drift, {rhs}, ys))
      throw FactorizationError("bordered penalized system is singular at eta = " +
                               std::to_string(eta) + ", lambda = (" +
                               std::to_string(lambda.real()) + ", " +
                               std::to_string(lambda.imag()) + ")");
    CVector m = ys[0].head(n);
    return finish(std::move(m), eta, lambda, drift, SolveMethod::Bordered);
  }

 private:
  struct Factor {
    bool bordered = false;
    double eta = -1.0;
    Drift drift = Drift::Forward;
    cplx lambda{0.0, 0.0};
    SparseC k;
    std::unique_ptr<Eigen::SparseLU<SparseC>> lu;
  };

  cplx dot_phi(const CVector& y) const {
    cplx s{0.0, 0.0};
    for (Eigen::Index k = 0; k < w_.size(); ++k) s += w_[k] * phi_[k] * y[k];
    return s;
  }

  SparseC system_matrix(bool bordered, double eta, cplx lambda, Drift drift) const {
    const OperatorMatrix op = operator_at(eta, lambda, drift);
    if (!bordered) return op.weighted;
    const Eigen::Index n = op.dim();
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(op.weighted.nonZeros() + 2 * n + 1);
    for (int c = 0; c < op.weighted.outerSize(); ++c)
      for (SparseC::InnerIterator it(op.weighted, c); it; ++it)
        trip.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index k = 0; k < n; ++k) {
      const double wp = w_[k] * phi_[k];
      trip.emplace_back(k, n, wp);
      trip.emplace_back(n, k, wp);
    }
    trip.emplace_back(n, n, -1.0);
    SparseC big(n + 1, n + 1);
    big.setFromTriplets(trip.begin(), trip.end());
    big.makeCompressed();
    return big;
  }

  bool factor(bool bordered, double eta, cplx lambda, Drift drift) {
    Factor f;
    f.bordered = bordered;
    f.eta = eta;
    f.drift = drift;
    f.lambda = lambda;
    f.k = system_matrix(bordered, eta, lambda, drift);
    f.lu = std::make_unique<Eigen::SparseLU<SparseC>>();
    f.lu->compute(f.k);
    ++factorizations_;
    if (f.lu->info() != Eigen::Success) {
      cache_.reset();
      return false;
    }
    cache_ = std::move(f);
    return true;
  }

  // Solves the (bordered or plain) weighted system for each right-hand side,
  // reusing the cached factorization when only lambda moved by a small amount.
  bool solve_cached(bool bordered, double eta, cplx lambda, Drift drift,
                    const std::vector<CVector>& rhs, std::vector<CVector>& out) {
    out.assign(rhs.size(), CVector());
    const double scale = std::pow(eta, 2.0 / 3.0);
    const bool same_operator =
        cache_ && cache_->bordered == bordered && cache_->eta == eta && cache_->drift == drift;
    if (same_operator && cache_->lambda == lambda) {
      for (std::size_t i = 0; i < rhs.size(); ++i) out[i] = cache_->lu->solve(rhs[i]);
      return true;
    }
    if (same_operator && std::abs(lambda - cache_->lambda) * scale <= opts_.refactor_tolerance) {
      const cplx delta = (lambda - cache_->lambda) * scale;
      bool ok = true;
      for (std::size_t i = 0; i < rhs.size() && ok; ++i) ok = refine(delta, rhs[i], out[i]);
      if (ok) return true;
    }
    if (!factor(bordered, eta, lambda, drift)) return false;
    for (std::size_t i = 0; i < rhs.size(); ++i) out[i] = cache_->lu->solve(rhs[i]);
    return true;
  }

  // (K_f - delta W) y = rhs by fixed-point iteration on the cached K_f, run until
  // the residual stagnates; accepted only at the accuracy of a fresh solve.
  bool refine(cplx delta, const CVector& rhs, CVector& y) const {
    const Eigen::Index n = w_.size();
    auto shifted = [&](const CVector& u) {
      CVector r = cache_->k * u;
      r.head(n) -= delta * w_.cast<cplx>().cwiseProduct(u.head(n));
      return r;
    };
    y = cache_->lu->solve(rhs);
    const double rn = rhs.norm();
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 30; ++it) {
      const CVector res = rhs - shifted(y);
      const double r = res.norm();
      if (r <= 1e-14 * rn) return true;
      if (!(r < 0.5 * prev)) return r <= 1e-11 * rn;
      prev = r;
      const CVector dy = cache_->lu->solve(res);
      if (!dy.allFinite()) return false;
      y += dy;
    }
    return prev <= 1e-11 * rn;
  }

  PenalizedSolution finish(CVector m, double eta, cplx lambda, Drift drift,
                           SolveMethod method) const {
    PenalizedSolution s;
    s.eta = eta;
    s.lambda = lambda;
    s.drift = drift;
    s.method = method;
    s.grid = grid_;
    s.coverage_ok = eta == 0.0 || grid_->v1_max >= required_v1_max(eta) * (1.0 - 1e-12);
    const double sgn = drift_sign(drift);
    const double e13 = std::cbrt(eta);
    cplx bd{0.0, 0.0}, moment{0.0, 0.0};
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      bd += w_[k] * (m[k] - m_[k]) * phi_[k];
      moment += w_[k] * (lambda - cplx(0.0, sgn * e13 * grid_->v1_at(k))) * m[k] * m_[k];
    }
    s.b_direct = bd;
    s.b_integral = e13 * e13 * moment / phi_mass_;

    const OperatorMatrix op = operator_at(eta, lambda, drift);
    const cplx pen = dot_phi(m);
    CVector r = op.weighted * m;
    for (Eigen::Index k = 0; k < m.size(); ++k) r[k] += w_[k] * phi_[k] * (pen - phi_mass_);
    double rn = 0.0;
    for (Eigen::Index k = 0; k < m.size(); ++k) rn += std::norm(r[k]) / w_[k];
    const double fn = phi_mass_ * std::sqrt((w_.array() * phi_.array().square()).sum());
    s.linear_residual = std::sqrt(rn) / fn;
    if (!(s.linear_residual <= opts_.residual_tolerance))
      throw FactorizationError("penalized solve residual " + sci(s.linear_residual) +
                               " above tolerance at eta = " + std::to_string(eta));

    const double gap = std::abs(s.b_direct - s.b_integral);
    const double allowed = opts_.cross_check_abs + opts_.cross_check_rel * std::abs(s.b_direct);
    if (!(gap <= allowed))
      throw CrossCheckError("b(lambda, eta) cross-check failed: direct and moment forms differ by " +
                            sci(gap) + " (allowed " + sci(allowed) + ") at eta = " +
                            std::to_string(eta));
    s.values = std::move(m);
    return s;
  }

  std::shared_ptr<const Grid> grid_;
  ModelParams params_;
  SolverOptions opts_;
  RVector m_, phi_, w_;
  double phi_mass_ = 1.0;
  std::optional<Factor> cache_;
  int factorizations_ = 0;
};

struct ConvergencePoint {
  double eta = 0.0;
  double gap_h0 = 0.0;  // ||M_{0,eta} - M||_{H_0}
  cplx b{0.0, 0.0};
};

/// ||M_{0,eta} - M||_{H_0} for each eta.
inline std::vector<ConvergencePoint> convergence_study(PenalizedSolver& solver,
                                                       const std::vector<double>& etas) {
  std::vector<ConvergencePoint> out;
  out.reserve(etas.size());
  const CVector m = solver.equilibrium().cast<cplx>();
  for (double eta : etas) {
    const PenalizedSolution s = solver.solve(eta, 0.0);
    const CVector diff = s.values - m;
    out.push_back({eta, weighted_norms(diff, solver.grid(), eta).h0, s.b_direct});
  }
  return out;
}

}  // namespace anomfp
