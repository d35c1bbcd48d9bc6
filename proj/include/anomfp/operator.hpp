#pragma once

// Discrete L_{lambda,eta} = -Delta + W + i eta v1 - lambda eta^{2/3}.
//
// The collision part is assembled in the divergence form
//   Q g = -(1/M) div(M^2 grad(g/M)),
// with one flux per interior face and zero flux through the truncation
// boundary and the axis.  This is a second-order discretization of -Delta + W
// whose kernel contains the sampled M exactly; the Classical stencil (-Delta_h
// plus pointwise W) is kept for consistency studies.
//
// Matrices are stored in weighted form K = W_q A, where W_q holds the
// quadrature weights.  K is complex symmetric, so <A u, w> = <u, A* w> with
// A* = A_{conj(lambda), -eta}.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Sparse>

#include "anomfp/error.hpp"
#include "anomfp/grid.hpp"
#include "anomfp/model.hpp"

namespace anomfp {

enum class Potential { None, Full, Tilde };
enum class Stencil { Conservative, Classical };
/// Reversed assembles -i eta v1, i.e. the operator at -eta.
enum class Drift { Forward, Reversed };

struct AssemblyOptions {
  Potential potential = Potential::Full;
  Stencil stencil = Stencil::Conservative;
  Drift drift = Drift::Forward;
};

using SparseC = Eigen::SparseMatrix<cplx>;
using SparseR = Eigen::SparseMatrix<double>;

inline double drift_sign(Drift d) { return d == Drift::Forward ? 1.0 : -1.0; }

struct OperatorMatrix {
  SparseC weighted;   // W_q A
  RVector weights;    // quadrature weights
  double eta = 0.0;
  cplx lambda{0.0, 0.0};
  AssemblyOptions options;

  Eigen::Index dim() const { return weighted.rows(); }

  CVector apply(const CVector& u) const {
    if (u.size() != dim()) throw ParameterError("operator applied to a vector of wrong size");
    return (weighted * u).cwiseQuotient(weights.cast<cplx>());
  }

  /// A itself (rows divided by the weights).
  SparseC matrix() const {
    SparseC a = weighted;
    for (int c = 0; c < a.outerSize(); ++c)
      for (SparseC::InnerIterator it(a, c); it; ++it) it.valueRef() /= weights[it.row()];
    return a;
  }
};

/// Symmetric stiffness matrix of the collision part (no drift, no lambda).
inline SparseR collision_stiffness(const Grid& g, const ModelParams& p, Potential potential,
                                   Stencil stencil) {
  const bool divergence = potential != Potential::None && stencil == Stencil::Conservative;
  std::function<double(double, double)> omega = [&p, divergence](double a, double b) {
    return divergence ? equilibrium_m(p, a, b) : 1.0;
  };
  std::vector<double> om(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) om[k] = omega(g.v1_at(k), g.r_at(k));

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * g.size());
  g.for_each_face([&](std::size_t k, std::size_t l, double c, double a, double b) {
    const double of = omega(a, b);
    const double flux = c * of * of;
    trip.emplace_back(k, k, flux / (om[k] * om[k]));
    trip.emplace_back(l, l, flux / (om[l] * om[l]));
    trip.emplace_back(k, l, -flux / (om[k] * om[l]));
    trip.emplace_back(l, k, -flux / (om[k] * om[l]));
  });
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double vsq = g.speed_sq_at(k);
    double pot = 0.0;
    if (stencil == Stencil::Classical) {
      if (potential == Potential::Full) pot = potential_w_sq(p, vsq);
      if (potential == Potential::Tilde) pot = potential_w_tilde_sq(p, vsq);
    } else if (potential == Potential::Tilde) {
      pot = potential_v_sq(p, vsq);
    }
    if (pot != 0.0) trip.emplace_back(k, k, g.weights[k] * pot);
  }
  const auto n = static_cast<Eigen::Index>(g.size());
  SparseR s(n, n);
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

inline OperatorMatrix assemble(const Grid& g, const ModelParams& p, double eta, cplx lambda,
                               AssemblyOptions opts = {}) {
  if (eta < 0.0) throw ParameterError("eta must be >= 0 (use Drift::Reversed for -eta)");
  OperatorMatrix op;
  op.eta = eta;
  op.lambda = lambda;
  op.options = opts;
  op.weights = Eigen::Map<const RVector>(g.weights.data(), static_cast<Eigen::Index>(g.size()));
  op.weighted = collision_stiffness(g, p, opts.potential, opts.stencil).cast<cplx>();
  const double sgn = drift_sign(opts.drift);
  const cplx shift = lambda * std::pow(eta, 2.0 / 3.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const cplx diag = cplx(0.0, sgn * eta * g.v1_at(k)) - shift;
    const auto kk = static_cast<Eigen::Index>(k);
    op.weighted.coeffRef(kk, kk) += g.weights[k] * diag;
  }
  op.weighted.makeCompressed();
  return op;
}

}  // namespace anomfp
