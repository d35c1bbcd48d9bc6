#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "anomfp/grid.hpp"

using namespace anomfp;

TEST(BuildGrid, LineNodesAndTrapezoidWeights) {
  const auto p = ModelParams::make(1, 2.5);
  const Grid g = build_grid(p, 17, 0, 8.0, 0.0);
  ASSERT_EQ(g.size(), 17u);
  EXPECT_DOUBLE_EQ(g.h_v1, 1.0);
  for (int i = 0; i < 17; ++i) EXPECT_DOUBLE_EQ(g.v1_nodes[i], i - 8.0);
  EXPECT_DOUBLE_EQ(g.weights.front(), 0.5);
  EXPECT_DOUBLE_EQ(g.weights.back(), 0.5);
  for (int i = 1; i < 16; ++i) EXPECT_DOUBLE_EQ(g.weights[i], 1.0);
}

TEST(BuildGrid, SymmetricNodeSet) {
  const auto p = ModelParams::make(1, 2.5);
  const Grid g = build_grid(p, 1001, 0, 37.3, 0.0);
  for (int i = 0; i < g.n_v1; ++i) EXPECT_EQ(g.v1_nodes[i], -g.v1_nodes[g.n_v1 - 1 - i]);
  for (int i = 0; i + 1 < g.n_v1; ++i) EXPECT_LT(g.v1_nodes[i], g.v1_nodes[i + 1]);
}

TEST(BuildGrid, WeightsSumToIntervalLength) {
  const auto p = ModelParams::make(1, 4.0);
  const Grid g = build_grid(p, 333, 0, 12.5, 0.0);
  double s = 0.0;
  for (double w : g.weights) s += w;
  EXPECT_NEAR(s, 25.0, 1e-12);
}

TEST(BuildGrid, RejectsBadArguments) {
  const auto p = ModelParams::make(2, 3.5);
  EXPECT_THROW(build_grid(p, 15, 32, 10.0, 10.0), ParameterError);
  EXPECT_THROW(build_grid(p, 32, 8, 10.0, 10.0), ParameterError);
  EXPECT_THROW(build_grid(p, 32, 32, -1.0, 10.0), ParameterError);
  EXPECT_THROW(build_grid(p, 32, 32, 10.0, 0.0), ParameterError);
}

TEST(BuildGrid, AxisymStaggeredRadius) {
  const auto p = ModelParams::make(3, 4.5);
  const Grid g = build_grid(p, 33, 20, 4.0, 4.0);
  EXPECT_DOUBLE_EQ(g.r_nodes.front(), 0.5 * g.h_r);
  for (double w : g.weights) EXPECT_GT(w, 0.0);
}

TEST(Quadrature, BallVolumeSecondOrder) {
  // smoothed indicator of the unit ball; exact integral via a 1-D radial rule
  for (int d : {2, 3}) {
    const auto p = ModelParams::make(d, d + 0.5);
    auto ball = [](double a, double b) { return 0.5 * (1.0 - std::tanh(20.0 * (std::hypot(a, b) - 1.0))); };
    double exact = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
      const double rho = (k + 0.5) * 3.0 / n;
      exact += sphere_area(d - 1) * std::pow(rho, d - 1) * ball(rho, 0.0) * 3.0 / n;
    }
    for (int level = 0; level < 3; ++level) {
      const int m = 40 << level;
      const Grid g = build_grid(p, 2 * m + 1, m, 2.0, 2.0);
      const double err = std::abs(integrate(g, sample(g, ball)) - exact);
      EXPECT_LT(err, 5.0 * g.h_r * g.h_r) << "d = " << d;
    }
  }
}

TEST(Quadrature, RadialOracleInThreeDimensions) {
  // int <v>^{-5} over the box |v1| <= 12, r <= 12 from a 1-D radial integral
  const double oracle = 4.15392943430425743720;
  const auto p = ModelParams::make(3, 4.5);
  auto f = [](double a, double b) { return std::pow(1.0 + a * a + b * b, -2.5); };
  double err[2];
  double val[2];
  for (int level = 0; level < 2; ++level) {
    const int m = 240 << level;
    const Grid g = build_grid(p, 2 * m + 1, m, 12.0, 12.0);
    val[level] = integrate(g, sample(g, f));
    err[level] = std::abs(val[level] - oracle);
  }
  EXPECT_NEAR(std::log2(err[0] / err[1]), 2.0, 0.05);
  EXPECT_NEAR((4.0 * val[1] - val[0]) / 3.0, oracle, 1e-4);
}

TEST(InnerProduct, EquilibriumNorm) {
  // <M, M> = 1 / C_beta^2 up to truncation of the (1+v^2)^{-gamma} tail
  const auto p = ModelParams::make(1, 4.0);
  const Grid g = build_grid(p, 40001, 0, 2000.0, 0.0);
  const RVector m = sample_equilibrium(g, p);
  EXPECT_NEAR(std::real(inner_product(m, m, g)) * p.c_beta_sq, 1.0, 1e-6);
}

TEST(InnerProduct, ConjugateLinearInSecondArgument) {
  const auto p = ModelParams::make(1, 2.5);
  const Grid g = build_grid(p, 64, 0, 10.0, 0.0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  CVector f(g.size()), h(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    f[k] = {nd(rng), nd(rng)};
    h[k] = {nd(rng), nd(rng)};
  }
  const cplx c{0.3, -1.7};
  const CVector ch = c * h;
  EXPECT_LT(std::abs(inner_product(f, ch, g) - std::conj(c) * inner_product(f, h, g)), 1e-12);
  EXPECT_LT(std::abs(inner_product(f, h, g) - std::conj(inner_product(h, f, g))), 1e-12);
}

TEST(InnerProduct, SizeMismatchThrows) {
  const auto p = ModelParams::make(1, 2.5);
  const Grid g = build_grid(p, 64, 0, 10.0, 0.0);
  const CVector f = CVector::Ones(10);
  EXPECT_THROW(inner_product(f, f, g), ParameterError);
}

TEST(WeightedNorms, OrderingAndZero) {
  const auto p = ModelParams::make(2, 3.5);
  const Grid g = build_grid(p, 81, 40, 10.0, 10.0);
  const CVector zero = CVector::Zero(g.size());
  EXPECT_EQ(weighted_norms(zero, g, 0.3).h_eta, 0.0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 5; ++t) {
    CVector f(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) f[k] = {nd(rng), nd(rng)};
    const auto a = weighted_norms(f, g, 0.01);
    const auto b = weighted_norms(f, g, 0.1);
    EXPECT_LE(a.h0, a.h_eta);
    EXPECT_LE(a.h_eta, b.h_eta);
  }
}
