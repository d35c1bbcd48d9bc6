#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "anomfp/kinetic.hpp"

using namespace anomfp;

namespace {

std::shared_ptr<const Grid> line(const ModelParams& p, int n = 2000, double vmax = 100.0) {
  return std::make_shared<const Grid>(build_grid(p, n, 0, vmax, 0.0));
}

CVector random_profile(const Grid& g, const ModelParams& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CVector out(static_cast<Eigen::Index>(g.size()));
  for (std::size_t k = 0; k < g.size(); ++k)
    out[static_cast<Eigen::Index>(k)] = equilibrium_m(p, g.v1_at(k)) * u(rng);
  return out;
}

KineticOptions no_estimate() {
  KineticOptions o;
  o.estimate_error = false;
  return o;
}

}  // namespace

TEST(EvolveMode, EquilibriumIsStationaryAtZeroFrequency) {
  const auto p = ModelParams::make(1, 2.5);
  const auto g = line(p, 800, 40.0);
  const CVector m = well_prepared(*g, p);
  const FourierModeRun r = evolve_mode(*g, p, 0.0, 0.1, m, 1.0, 200);
  EXPECT_LT((r.g - m).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(r.error_estimate, 1e-12);
}

TEST(EvolveMode, MassConservedAtZeroFrequency) {
  const auto p = ModelParams::make(1, 4.0);
  const auto g = line(p, 800, 40.0);
  const FourierModeRun r = evolve_mode(*g, p, 0.0, 0.05, random_profile(*g, p, 7), 2.0, 400, no_estimate());
  for (cplx rho : r.rho_hat) EXPECT_LT(std::abs(rho - r.rho_hat.front()), 1e-10 * std::abs(r.rho_hat.front()));
}

TEST(EvolveMode, NormNonincreasing) {
  const auto p = ModelParams::make(1, 2.5);
  const auto g = line(p);
  const FourierModeRun r = evolve_mode(*g, p, 1.0, 0.1, random_profile(*g, p, 11), 1.0, 500, no_estimate());
  for (std::size_t i = 1; i < r.l2_norms.size(); ++i) EXPECT_LE(r.l2_norms[i], r.l2_norms[i - 1] * (1.0 + 1e-14));
  EXPECT_LT(r.l2_norms.back(), r.l2_norms.front());
}

TEST(EvolveMode, SemigroupProperty) {
  const auto p = ModelParams::make(1, 2.5);
  const auto g = line(p, 800, 40.0);
  const CVector g0 = well_prepared(*g, p, 1.0, 0.5);
  const KineticOptions o = no_estimate();
  const FourierModeRun whole = evolve_mode(*g, p, 1.0, 0.1, g0, 1.0, 300, o);
  const FourierModeRun first = evolve_mode(*g, p, 1.0, 0.1, g0, 0.4, 120, o);
  const FourierModeRun second = evolve_mode(*g, p, 1.0, 0.1, first.g, 0.6, 180, o);
  EXPECT_LT((second.g - whole.g).norm() / whole.g.norm(), 1e-12);
}

TEST(EvolveMode, StepHalvingEstimateIsSecondOrder) {
  const auto p = ModelParams::make(1, 2.5);
  const auto g = line(p, 800, 40.0);
  const CVector g0 = well_prepared(*g, p, 1.0, 0.5);
  KineticOptions o;
  o.error_tolerance = 0.0;
  const double a = evolve_mode(*g, p, 1.0, 0.1, g0, 1.0, 200, o).error_estimate;
  const double b = evolve_mode(*g, p, 1.0, 0.1, g0, 1.0, 400, o).error_estimate;
  EXPECT_NEAR(std::log2(a / b), 2.0, 0.25);
  o.error_tolerance = 1e-8;
  EXPECT_THROW(evolve_mode(*g, p, 1.0, 0.1, g0, 1.0, 20, o), ConvergenceError);
}

TEST(EvolveMode, RejectsBadInput) {
  const auto p = ModelParams::make(1, 2.5);
  const auto g = line(p, 100, 20.0);
  const CVector g0 = well_prepared(*g, p);
  EXPECT_THROW(evolve_mode(*g, p, 1.0, 0.0, g0, 1.0, 10), ParameterError);
  EXPECT_THROW(evolve_mode(*g, p, 1.0, 0.1, g0, 1.0, 0), ParameterError);
  EXPECT_THROW(evolve_mode(*g, p, 1.0, 0.1, CVector::Ones(5), 1.0, 10), ParameterError);
}

TEST(FractionalReference, ExponentialLaw) {
  EXPECT_EQ(fractional_reference(1.3, 0.0, {2.0, 1.0}, 0.4, 7.0 / 6.0), cplx(2.0, 1.0));
  EXPECT_EQ(fractional_reference(0.0, 5.0, 2.0, 0.4, 7.0 / 6.0), cplx(2.0, 0.0));
  const double xi = 2.0, kappa = 0.37, alpha = 1.4;
  const double t = std::log(2.0) / (kappa * std::pow(xi, alpha));
  EXPECT_NEAR(std::abs(fractional_reference(xi, t, 1.0, kappa, alpha)), 0.5, 1e-15);
  EXPECT_THROW(fractional_reference(1.0, 1.0, 1.0, 0.0, alpha), ParameterError);
}

TEST(LimitComparison, ErrorDecreasesAndProjectionDecaysExactly) {
  const auto p = ModelParams::make(1, 2.5);
  const auto g = line(p);
  const CVector g0 = well_prepared(*g, p, 1.0, 0.5);
  const LimitTable t = limit_comparison(g, p, 1.0, {0.2, 0.1, 0.05}, g0, 2.0, 0.364479879466945, 4000);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_TRUE(t.strictly_decreasing());
  EXPECT_LT(t.max_rate_mismatch(), 1e-6);
  for (const auto& r : t.rows) {
    EXPECT_GT(r.mu.real(), 0.0);
    EXPECT_LT(r.error_estimate, 1e-6);
  }
}

TEST(LimitComparison, ZeroFrequencyRowsVanish) {
  const auto p = ModelParams::make(1, 2.5);
  const auto g = line(p, 800, 40.0);
  const LimitTable t = limit_comparison(g, p, 0.0, {0.2, 0.1, 0.05}, well_prepared(*g, p, 1.0, 0.5), 1.0,
                                        0.36, 200);
  for (const auto& r : t.rows) EXPECT_LT(r.error, 1e-10);
  EXPECT_THROW(limit_comparison(g, p, 1.0, {0.1, 0.2}, well_prepared(*g, p), 1.0, 0.36, 10), ParameterError);
}
