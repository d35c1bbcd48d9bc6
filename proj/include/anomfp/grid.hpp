#pragma once

// Truncated velocity grids.  d = 1 uses a symmetric line in v1; d >= 2 uses the
// axisymmetric half-plane (v1, r = |v'|) with a staggered radial grid
// r_j = (j + 1/2) h_r so that the axis itself is never a node.
//
// Quadrature: trapezoid in v1, midpoint in r, with the measure
// |S^{d-2}| r^{d-2} dr dv1 folded into the weights.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "anomfp/error.hpp"
#include "anomfp/model.hpp"

namespace anomfp {

using cplx = std::complex<double>;
using RVector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;

enum class Geometry { Line, Axisym };

struct Grid {
  Geometry geometry = Geometry::Line;
  int d = 1;
  int n_v1 = 0;
  int n_r = 1;
  double h_v1 = 0.0;
  double h_r = 0.0;
  double v1_max = 0.0;
  double r_max = 0.0;
  std::vector<double> v1_nodes;
  std::vector<double> r_nodes;   // {0} for Line
  std::vector<double> v1_weights;  // 1-D trapezoid weights
  std::vector<double> weights;     // full quadrature weights, node k = j * n_v1 + i

  std::size_t size() const { return weights.size(); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * n_v1 + i; }
  double v1_at(std::size_t k) const { return v1_nodes[k % n_v1]; }
  double r_at(std::size_t k) const { return r_nodes[k / n_v1]; }
  double speed_sq_at(std::size_t k) const {
    const double a = v1_at(k), b = r_at(k);
    return a * a + b * b;
  }

  /// Transverse measure of a v1-face in row j (1 for Line).
  double transverse_measure(int j) const {
    if (geometry == Geometry::Line) return 1.0;
    return sphere_area(d - 2) * std::pow(r_nodes[j], d - 2) * h_r;
  }

  /// Calls fn(k, l, coefficient, v1_face, r_face) for every interior face.
  /// coefficient = face area / distance, so sum_f c_f |u_k - u_l|^2 approximates
  /// int |grad u|^2 dv.  No faces exist on the truncation boundary or the axis.
  template <class Fn>
  void for_each_face(Fn&& fn) const {
    for (int j = 0; j < n_r; ++j) {
      const double area = transverse_measure(j);
      for (int i = 0; i + 1 < n_v1; ++i) {
        fn(index(i, j), index(i + 1, j), area / h_v1, 0.5 * (v1_nodes[i] + v1_nodes[i + 1]),
           r_nodes[j]);
      }
    }
    if (geometry == Geometry::Axisym) {
      const double sphere = sphere_area(d - 2);
      for (int j = 0; j + 1 < n_r; ++j) {
        const double rf = (j + 1) * h_r;
        const double area_r = sphere * std::pow(rf, d - 2);
        for (int i = 0; i < n_v1; ++i) {
          fn(index(i, j), index(i, j + 1), v1_weights[i] * area_r / h_r, v1_nodes[i], rf);
        }
      }
    }
  }
};

/// Builds the grid for the model dimension.  For d = 1, n_r and r_max are ignored.
inline Grid build_grid(const ModelParams& params, int n_v1, int n_r, double v1_max,
                       double r_max) {
  if (n_v1 < 16) throw ParameterError("n_v1 must be >= 16, got " + std::to_string(n_v1));
  if (!(v1_max > 0.0)) throw ParameterError("v1_max must be positive");
  Grid g;
  g.d = params.d;
  g.geometry = params.d == 1 ? Geometry::Line : Geometry::Axisym;
  g.n_v1 = n_v1;
  g.v1_max = v1_max;
  g.h_v1 = 2.0 * v1_max / (n_v1 - 1);
  g.v1_nodes.resize(n_v1);
  g.v1_weights.assign(n_v1, g.h_v1);
  for (int i = 0; i < n_v1; ++i) {
    // symmetric construction keeps v1 -> -v1 an exact node permutation
    const int m = n_v1 - 1 - i;
    g.v1_nodes[i] = 0.5 * (i - m) * g.h_v1;
  }
  g.v1_weights.front() *= 0.5;
  g.v1_weights.back() *= 0.5;

  if (g.geometry == Geometry::Line) {
    g.n_r = 1;
    g.r_nodes = {0.0};
    g.weights = g.v1_weights;
    return g;
  }

  if (n_r < 16) throw ParameterError("n_r must be >= 16, got " + std::to_string(n_r));
  if (!(r_max > 0.0)) throw ParameterError("r_max must be positive");
  g.n_r = n_r;
  g.r_max = r_max;
  g.h_r = r_max / n_r;
  g.r_nodes.resize(n_r);
  for (int j = 0; j < n_r; ++j) g.r_nodes[j] = (j + 0.5) * g.h_r;
  g.weights.resize(static_cast<std::size_t>(n_v1) * n_r);
  for (int j = 0; j < n_r; ++j) {
    const double wr = g.transverse_measure(j);
    for (int i = 0; i < n_v1; ++i) g.weights[g.index(i, j)] = g.v1_weights[i] * wr;
  }
  return g;
}

/// Smallest truncation radius that covers the rescaled scale of eta.
inline double required_v1_max(double eta) { return 8.0 * std::pow(std::abs(eta), -1.0 / 3.0); }

inline RVector sample(const Grid& g, const std::function<double(double, double)>& f) {
  RVector out(static_cast<Eigen::Index>(g.size()));
  for (std::size_t k = 0; k < g.size(); ++k) out[k] = f(g.v1_at(k), g.r_at(k));
  return out;
}

inline RVector sample_equilibrium(const Grid& g, const ModelParams& p) {
  return sample(g, [&p](double a, double b) { return equilibrium_m(p, a, b); });
}

inline RVector sample_penalty(const Grid& g, const ModelParams& p) {
  return sample(g, [&p](double a, double b) { return penalty_phi(p, a, b); });
}

inline void check_size(const Grid& g, Eigen::Index n) {
  if (static_cast<std::size_t>(n) != g.size())
    throw ParameterError("field size " + std::to_string(n) + " does not match grid size " +
                         std::to_string(g.size()));
}

template <class Derived>
auto integrate(const Grid& g, const Eigen::MatrixBase<Derived>& f) {
  check_size(g, f.size());
  typename Derived::Scalar s{0};
  for (std::size_t k = 0; k < g.size(); ++k) s += g.weights[k] * f[k];
  return s;
}

/// <f, g> = int f conj(g) dv; conjugate-linear in the second argument.
template <class A, class B>
cplx inner_product(const Eigen::MatrixBase<A>& f, const Eigen::MatrixBase<B>& h, const Grid& g) {
  check_size(g, f.size());
  check_size(g, h.size());
  cplx s{0.0, 0.0};
  for (std::size_t k = 0; k < g.size(); ++k)
    s += g.weights[k] * cplx(f[k]) * std::conj(cplx(h[k]));
  return s;
}

/// Bilinear pairing int f h dv (no conjugation).
template <class A, class B>
cplx pairing(const Eigen::MatrixBase<A>& f, const Eigen::MatrixBase<B>& h, const Grid& g) {
  check_size(g, f.size());
  check_size(g, h.size());
  cplx s{0.0, 0.0};
  for (std::size_t k = 0; k < g.size(); ++k) s += g.weights[k] * cplx(f[k]) * cplx(h[k]);
  return s;
}

template <class A>
double l2_norm(const Eigen::MatrixBase<A>& f, const Grid& g) {
  return std::sqrt(std::real(inner_product(f, f, g)));
}

/// sum_faces c_f omega_f^2 |u_k/omega_k - u_l/omega_l|^2, the discrete form of
/// int |grad(u/omega)|^2 omega^2 dv.  omega(v1, r) is evaluated at nodes and faces.
template <class A>
double weighted_dirichlet(const Grid& g, const Eigen::MatrixBase<A>& u,
                          const std::function<double(double, double)>& omega) {
  check_size(g, u.size());
  std::vector<double> om(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) om[k] = omega(g.v1_at(k), g.r_at(k));
  double e = 0.0;
  g.for_each_face([&](std::size_t k, std::size_t l, double c, double a, double b) {
    const double of = omega(a, b);
    e += c * of * of * std::norm(cplx(u[k]) / om[k] - cplx(u[l]) / om[l]);
  });
  return e;
}

/// int |grad u|^2 dv.
template <class A>
double dirichlet(const Grid& g, const Eigen::MatrixBase<A>& u) {
  check_size(g, u.size());
  double e = 0.0;
  g.for_each_face([&](std::size_t k, std::size_t l, double c, double, double) {
    e += c * std::norm(cplx(u[k]) - cplx(u[l]));
  });
  return e;
}

struct WeightedNorms {
  double h0 = 0.0;     // (int |grad psi|^2 + int |psi|^2 / <v>^2)^{1/2}
  double h_eta = 0.0;  // h0^2 + eta int |v1| |psi|^2, square-rooted
  double l2 = 0.0;
};

template <class A>
WeightedNorms weighted_norms(const Eigen::MatrixBase<A>& f, const Grid& g, double eta) {
  check_size(g, f.size());
  double hardy = 0.0, drift = 0.0, l2 = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double a = std::norm(cplx(f[k]));
    hardy += g.weights[k] * a / (1.0 + g.speed_sq_at(k));
    drift += g.weights[k] * std::abs(g.v1_at(k)) * a;
    l2 += g.weights[k] * a;
  }
  const double grad = dirichlet(g, f);
  WeightedNorms n;
  n.h0 = std::sqrt(grad + hardy);
  n.h_eta = std::sqrt(grad + hardy + std::abs(eta) * drift);
  n.l2 = std::sqrt(l2);
  return n;
}

}  // namespace anomfp
