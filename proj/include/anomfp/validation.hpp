#pragma once

// Constant-estimation checks of the weighted inequalities behind the
// construction, over seeded random test functions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "anomfp/error.hpp"
#include "anomfp/grid.hpp"
#include "anomfp/model.hpp"

namespace anomfp {

struct InequalityReport {
  std::string name;
  int d = 1;
  double beta = 0.0;
  double eta = 0.0;
  int trials = 0;
  double constant = 0.0;          // estimate on the given grid
  double constant_refined = 0.0;  // same trials on the doubled grid
  double constant_low = 0.0;      // lower ratio bound (norm equivalence)
  double constant_low_refined = 0.0;
  double worst_ratio = 0.0;       // LHS / RHS on the refined grid with the coarse constant
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

/// Band-limited random function times a compactly supported smooth cutoff,
/// written in the variable s = scale * v and evaluated on (v1, r).  Even in r,
/// so it is smooth on the axis of an axisymmetric grid.
class RandomProfile {
 public:
  RandomProfile(std::uint64_t seed, double scale, double k_max, double radius_min, double radius_max,
                double shift_max)
      : scale_(scale) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    radius_ = radius_min + (radius_max - radius_min) * u(rng);
    shift_ = shift_max * (2.0 * u(rng) - 1.0);
    for (int j = 0; j < kTerms; ++j) {
      k1_[j] = k_max * u(rng);
      kr_[j] = k_max * u(rng);
      phase_[j] = 2.0 * std::numbers::pi * u(rng);
      amp_[j] = cplx(n(rng), n(rng)) / (1.0 + k1_[j] * k1_[j] + kr_[j] * kr_[j]);
    }
  }

  cplx operator()(double v1, double r) const {
    const double s1 = scale_ * v1 - shift_, sr = scale_ * r;
    const double q = (s1 * s1 + sr * sr) / (radius_ * radius_);
    if (q >= 1.0) return 0.0;
    const double cut = std::exp(1.0 - 1.0 / (1.0 - q));
    cplx s{0.0, 0.0};
    for (int j = 0; j < kTerms; ++j) s += amp_[j] * std::cos(k1_[j] * s1 + phase_[j]) * std::cos(kr_[j] * sr);
    return cut * s;
  }

  /// Largest |v| in the support.
  double reach() const { return (std::abs(shift_) + radius_) / scale_; }

  CVector sample(const Grid& g) const {
    CVector out(static_cast<Eigen::Index>(g.size()));
    for (std::size_t k = 0; k < g.size(); ++k) out[static_cast<Eigen::Index>(k)] = (*this)(g.v1_at(k), g.r_at(k));
    return out;
  }

 private:
  static constexpr int kTerms = 6;
  double scale_ = 1.0, radius_ = 1.0, shift_ = 0.0;
  double k1_[kTerms]{}, kr_[kTerms]{}, phase_[kTerms]{};
  cplx amp_[kTerms]{};
};

/// The grid with twice the resolution in every direction and the same extent.
inline Grid refined_grid(const Grid& g, const ModelParams& p) {
  return build_grid(p, 2 * g.n_v1 - 1, g.geometry == Geometry::Axisym ? 2 * g.n_r : 0, g.v1_max, g.r_max);
}

struct HardyTerms {
  double dirichlet = 0.0;  // int |grad(g/M)|^2 M^2
  double hardy = 0.0;      // int |g|^2 / <v>^2
};

/// Terms of the Hardy-Poincare inequality after projecting out the M direction
/// so that int g M / <v>^2 = 0.
inline HardyTerms hardy_terms(const Grid& g, const ModelParams& p, CVector u) {
  const RVector m = sample_equilibrium(g, p);
  double mm = 0.0;
  cplx um{0.0, 0.0};
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double w = g.weights[k] / (1.0 + g.speed_sq_at(k));
    mm += w * m[kk] * m[kk];
    um += w * u[kk] * m[kk];
  }
  u -= (um / mm) * m.cast<cplx>();
  HardyTerms t;
  t.dirichlet = weighted_dirichlet(g, u, [&](double a, double b) { return equilibrium_m(p, a, b); });
  for (std::size_t k = 0; k < g.size(); ++k)
    t.hardy += g.weights[k] * std::norm(u[static_cast<Eigen::Index>(k)]) / (1.0 + g.speed_sq_at(k));
  return t;
}

/// ||psi||_{H~_eta}^2 = int |grad(psi/M)|^2 M^2 + int V |psi|^2 + eta int |v1| |psi|^2.
inline double tilde_norm_sq(const Grid& g, const ModelParams& p, const CVector& u, double eta) {
  double s = weighted_dirichlet(g, u, [&](double a, double b) { return equilibrium_m(p, a, b); });
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double a = std::norm(u[static_cast<Eigen::Index>(k)]);
    s += g.weights[k] * (potential_v_sq(p, g.speed_sq_at(k)) + eta * std::abs(g.v1_at(k))) * a;
  }
  return s;
}

namespace detail {

inline double support_limit(const Grid& g) {
  return 0.9 * (g.geometry == Geometry::Axisym ? std::min(g.v1_max, g.r_max) : g.v1_max);
}

inline std::vector<RandomProfile> velocity_trials(const Grid& g, int n, std::uint64_t seed) {
  const double lim = support_limit(g);
  std::vector<RandomProfile> out;
  for (int i = 0; i < n; ++i) out.emplace_back(seed + i, 1.0, 3.0, 1.0, std::min(12.0, 0.5 * lim), std::min(8.0, 0.4 * lim));
  return out;
}

inline double rel_change(double a, double b) { return std::abs(b / a - 1.0); }

}  // namespace detail

/// Lambda = min over trials of int |grad(g/M)|^2 M^2 / int |g|^2/<v>^2 with g
/// orthogonal to M for the weight <v>^{-2}.
inline InequalityReport hardy_poincare_check(const Grid& grid, const ModelParams& p, int n_trials,
                                             std::uint64_t seed = 1, double tolerance = 0.10) {
  if (n_trials < 1) throw ParameterError("need at least one trial");
  const Grid fine = refined_grid(grid, p);
  InequalityReport r;
  r.name = "hardy_poincare";
  r.d = p.d;
  r.beta = p.beta;
  r.trials = n_trials;
  r.tolerance = tolerance;
  const auto trials = detail::velocity_trials(grid, n_trials, seed);
  std::vector<HardyTerms> fine_terms;
  double lam = std::numeric_limits<double>::infinity(), lam_f = lam;
  for (const auto& f : trials) {
    const HardyTerms a = hardy_terms(grid, p, f.sample(grid));
    const HardyTerms b = hardy_terms(fine, p, f.sample(fine));
    lam = std::min(lam, a.dirichlet / a.hardy);
    lam_f = std::min(lam_f, b.dirichlet / b.hardy);
    fine_terms.push_back(b);
  }
  for (const auto& b : fine_terms) r.worst_ratio = std::max(r.worst_ratio, lam * b.hardy / b.dirichlet);
  r.constant = lam;
  r.constant_refined = lam_f;
  r.pass = std::isfinite(lam) && lam > 0.0 && r.worst_ratio <= 1.0 + tolerance &&
           detail::rel_change(lam, lam_f) <= tolerance;
  r.detail = "Lambda estimate " + sci(lam) + ", refined " + sci(lam_f);
  return r;
}

/// C0 = max over trials of eta^{1/3} ||psi||_2 / ||psi||_{H_eta}, with trial
/// functions psi(v) = phi(eta^{1/3} v) living on the eta^{-1/3} scale.
inline InequalityReport eta_poincare_check(const Grid& grid, const ModelParams& p, double eta, int n_trials,
                                           std::uint64_t seed = 1, double tolerance = 0.20) {
  if (!(eta > 0.0)) throw ParameterError("eta must be positive");
  if (n_trials < 1) throw ParameterError("need at least one trial");
  const double e13 = std::cbrt(eta);
  const double lim = detail::support_limit(grid) * e13;
  if (lim < 2.0) throw CoverageError("grid too small for the eta^{-1/3} scale at eta = " + sci(eta));
  const Grid fine = refined_grid(grid, p);
  InequalityReport r;
  r.name = "eta_poincare";
  r.d = p.d;
  r.beta = p.beta;
  r.eta = eta;
  r.trials = n_trials;
  r.tolerance = tolerance;
  double c = 0.0, c_f = 0.0;
  std::vector<double> fine_ratio;
  for (int i = 0; i < n_trials; ++i) {
    const RandomProfile f(seed + i, e13, 3.0, 0.5, std::min(2.5, 0.5 * lim), std::min(2.0, 0.4 * lim));
    const CVector a = f.sample(grid), b = f.sample(fine);
    const WeightedNorms na = weighted_norms(a, grid, eta), nb = weighted_norms(b, fine, eta);
    c = std::max(c, e13 * na.l2 / na.h_eta);
    const double rb = e13 * nb.l2 / nb.h_eta;
    c_f = std::max(c_f, rb);
    fine_ratio.push_back(rb);
  }
  for (double x : fine_ratio) r.worst_ratio = std::max(r.worst_ratio, x / c);
  r.constant = c;
  r.constant_refined = c_f;
  r.pass = std::isfinite(c) && c > 0.0 && r.worst_ratio <= 1.0 + tolerance && detail::rel_change(c, c_f) <= tolerance;
  r.detail = "C0 estimate " + sci(c) + ", refined " + sci(c_f);
  return r;
}

/// Runs eta_poincare_check over several eta and requires the constants to agree
/// within the tolerance, besides each being refinement-stable.
inline InequalityReport eta_poincare_sweep(const Grid& grid, const ModelParams& p, const std::vector<double>& etas,
                                           int n_trials, std::uint64_t seed = 1, double tolerance = 0.20) {
  if (etas.size() < 2) throw ParameterError("eta sweep needs at least two values");
  InequalityReport r;
  r.name = "eta_poincare";
  r.d = p.d;
  r.beta = p.beta;
  r.trials = n_trials;
  r.tolerance = tolerance;
  r.pass = true;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double eta : etas) {
    const InequalityReport one = eta_poincare_check(grid, p, eta, n_trials, seed, tolerance);
    r.pass = r.pass && one.pass;
    r.worst_ratio = std::max(r.worst_ratio, one.worst_ratio);
    lo = std::min(lo, one.constant);
    hi = std::max(hi, one.constant);
    if (r.detail.empty()) {
      r.eta = eta;
      r.constant = one.constant;
      r.constant_refined = one.constant_refined;
    }
    r.detail += "eta " + sci(eta) + ": C0 " + sci(one.constant) + " (refined " + sci(one.constant_refined) + "); ";
  }
  r.constant_low = lo;
  r.pass = r.pass && hi / lo - 1.0 <= tolerance;
  r.detail += "spread " + sci(hi / lo - 1.0);
  return r;
}

/// C1 = min and C2 = max over trials of ||psi||_{H_eta} / ||psi||_{H~_eta};
/// the equilibrium M is always one of the trials.
inline InequalityReport norm_equivalence_check(const Grid& grid, const ModelParams& p, double eta, int n_trials,
                                               std::uint64_t seed = 1, double tolerance = 0.10,
                                               double max_gap = 1e3) {
  if (eta < 0.0) throw ParameterError("eta must be >= 0");
  if (n_trials < 1) throw ParameterError("need at least one trial");
  const Grid fine = refined_grid(grid, p);
  InequalityReport r;
  r.name = "norm_equivalence";
  r.d = p.d;
  r.beta = p.beta;
  r.eta = eta;
  r.trials = n_trials + 1;
  r.tolerance = tolerance;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0, lo_f = lo, hi_f = 0.0;
  std::vector<double> fine_ratio;
  auto ratio = [&](const Grid& g, const CVector& u) {
    return weighted_norms(u, g, eta).h_eta / std::sqrt(tilde_norm_sq(g, p, u, eta));
  };
  auto add = [&](const CVector& a, const CVector& b) {
    const double ra = ratio(grid, a), rb = ratio(fine, b);
    lo = std::min(lo, ra);
    hi = std::max(hi, ra);
    lo_f = std::min(lo_f, rb);
    hi_f = std::max(hi_f, rb);
    fine_ratio.push_back(rb);
  };
  add(sample_equilibrium(grid, p).cast<cplx>(), sample_equilibrium(fine, p).cast<cplx>());
  for (const auto& f : detail::velocity_trials(grid, n_trials, seed)) add(f.sample(grid), f.sample(fine));
  for (double x : fine_ratio) r.worst_ratio = std::max({r.worst_ratio, x / hi, lo / x});
  r.constant = hi;
  r.constant_refined = hi_f;
  r.constant_low = lo;
  r.constant_low_refined = lo_f;
  r.pass = std::isfinite(hi) && lo > 0.0 && hi / lo < max_gap && r.worst_ratio <= 1.0 + tolerance &&
           detail::rel_change(hi, hi_f) <= tolerance && detail::rel_change(lo, lo_f) <= tolerance;
  r.detail = "C1 " + sci(lo) + ", C2 " + sci(hi) + ", gap " + sci(hi / lo);
  return r;
}

struct ValidationCase {
  int d = 1;
  double beta = 2.5;
};

inline const std::vector<ValidationCase>& shipped_cases() {
  static const std::vector<ValidationCase> cases{{1, 2.5}, {1, 4.0}, {2, 3.5}, {3, 4.5}};
  return cases;
}

/// Default velocity grid for the inequality suite.
inline Grid validation_grid(const ModelParams& p) {
  return p.d == 1 ? build_grid(p, 801, 0, 40.0, 0.0) : build_grid(p, 121, 60, 30.0, 30.0);
}

}  // namespace anomfp
