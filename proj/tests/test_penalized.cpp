#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "anomfp/penalized.hpp"

using namespace anomfp;

namespace {

std::shared_ptr<const Grid> line_grid(const ModelParams& p, int n, double vmax) {
  return std::make_shared<const Grid>(build_grid(p, n, 0, vmax, 0.0));
}

// Dense solve of (A + Phi Phi^*) m = <M, Phi> Phi built entry by entry.
CVector dense_oracle(const PenalizedSolver& s, double eta, cplx lambda) {
  const Grid& g = s.grid();
  const Eigen::MatrixXcd a = Eigen::MatrixXcd(s.operator_at(eta, lambda, Drift::Forward).matrix());
  Eigen::MatrixXcd full = a;
  const auto n = static_cast<Eigen::Index>(g.size());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) full(i, j) += s.penalty()[i] * g.weights[j] * s.penalty()[j];
  const CVector rhs = (s.phi_mass() * s.penalty()).cast<cplx>();
  return full.fullPivLu().solve(rhs);
}

}  // namespace

TEST(PenalizedSolver, EtaZeroReturnsEquilibrium) {
  const auto p = ModelParams::make(1, 2.5);
  PenalizedSolver s(line_grid(p, 400, 40.0), p);
  for (cplx lambda : {cplx(0.0, 0.0), cplx(0.3, -0.2), cplx(-0.4, 0.1)}) {
    const auto sol = s.solve(0.0, lambda);
    const CVector diff = sol.values - s.equilibrium().cast<cplx>();
    EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(std::abs(sol.b_direct), 1e-12);
  }
}

TEST(PenalizedSolver, RankOneMatchesDenseOracle) {
  const auto p = ModelParams::make(1, 2.5);
  PenalizedSolver s(line_grid(p, 64, 20.0), p);
  const CVector m = dense_oracle(s, 0.1, 0.0);
  for (auto method : {SolveMethod::ShermanMorrison, SolveMethod::Bordered}) {
    const auto sol = s.solve_with(method, 0.1, 0.0);
    EXPECT_EQ(sol.method, method);
    EXPECT_LT((sol.values - m).norm() / m.norm(), 1e-10);
  }
}

TEST(PenalizedSolver, RankOneMatchesBorderedSolve) {
  const auto p = ModelParams::make(2, 3.5);
  PenalizedSolver s(std::make_shared<const Grid>(build_grid(p, 61, 30, 20.0, 20.0)), p);
  const auto a = s.solve_with(SolveMethod::ShermanMorrison, 0.2, {0.1, 0.05});
  const auto b = s.solve_with(SolveMethod::Bordered, 0.2, {0.1, 0.05});
  EXPECT_LT((a.values - b.values).norm() / b.values.norm(), 1e-10);
}

TEST(PenalizedSolver, ConjugationSymmetry) {
  // conj(M_{conj(lambda), eta})(-v1) = M_{lambda, eta}(v1)
  const auto p = ModelParams::make(1, 4.0);
  auto g = line_grid(p, 801, 40.0);
  PenalizedSolver s(g, p);
  const cplx lambda{0.2, 0.15};
  const auto a = s.solve(0.05, lambda);
  const auto b = s.solve(0.05, std::conj(lambda));
  const int n = g->n_v1;
  double err = 0.0;
  for (int i = 0; i < n; ++i) err = std::max(err, std::abs(std::conj(b.values[n - 1 - i]) - a.values[i]));
  EXPECT_LT(err, 1e-11);
}

TEST(PenalizedSolver, ParityOfRealAndImaginaryParts) {
  const auto p = ModelParams::make(1, 2.5);
  auto g = line_grid(p, 801, 40.0);
  PenalizedSolver s(g, p);
  const auto sol = s.solve(0.05, 0.0);
  const int n = g->n_v1;
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(sol.values[i].real(), sol.values[n - 1 - i].real(), 1e-12);
    EXPECT_NEAR(sol.values[i].imag(), -sol.values[n - 1 - i].imag(), 1e-12);
  }
}

TEST(PenalizedSolver, CrossCheckAndResidual) {
  const auto p = ModelParams::make(3, 4.5);
  PenalizedSolver s(std::make_shared<const Grid>(build_grid(p, 81, 40, 20.0, 20.0)), p);
  const auto sol = s.solve(0.1, {0.05, -0.1});
  EXPECT_LT(std::abs(sol.b_direct - sol.b_integral), 1e-11 + 1e-6 * std::abs(sol.b_direct));
  EXPECT_LT(sol.linear_residual, 1e-10);
  EXPECT_TRUE(sol.coverage_ok);
}

TEST(PenalizedSolver, PhiMassIsOne) {
  const auto p = ModelParams::make(1, 2.5);
  PenalizedSolver s(line_grid(p, 40001, 2000.0), p);
  EXPECT_NEAR(s.phi_mass(), 1.0, 1e-6);
}

TEST(PenalizedSolver, RejectsOutsideBall) {
  const auto p = ModelParams::make(1, 2.5);
  PenalizedSolver s(line_grid(p, 64, 20.0), p);
  EXPECT_THROW(s.solve(0.1, {0.6, 0.0}), ParameterError);
  EXPECT_THROW(s.solve(-0.1, 0.0), ParameterError);
}

TEST(PenalizedSolver, FactorizationReusedForSmallLambdaSteps) {
  const auto p = ModelParams::make(1, 2.5);
  PenalizedSolver s(line_grid(p, 2001, 40.0), p);
  const auto a = s.solve(0.01, {0.1, 0.0});
  const int before = s.factorizations();
  const auto b = s.solve(0.01, {0.1 + 1e-10, 1e-10});
  EXPECT_EQ(s.factorizations(), before);
  PenalizedSolver fresh(line_grid(p, 2001, 40.0), p);
  const auto c = fresh.solve(0.01, {0.1 + 1e-10, 1e-10});
  EXPECT_LT((b.values - c.values).norm() / c.values.norm(), 1e-9);
  EXPECT_LT(b.linear_residual, 10.0 * c.linear_residual + 1e-13);
}

TEST(ConvergenceStudy, GapsDecreaseWithEta) {
  const auto p = ModelParams::make(1, 2.5);
  PenalizedSolver s(line_grid(p, 4001, 100.0), p);
  const auto pts = convergence_study(s, {0.1, 0.05, 0.025, 0.0});
  ASSERT_EQ(pts.size(), 4u);
  EXPECT_GT(pts[0].gap_h0, pts[1].gap_h0);
  EXPECT_GT(pts[1].gap_h0, pts[2].gap_h0);
  EXPECT_LT(pts[3].gap_h0, 1e-10);
  for (const auto& q : pts) EXPECT_LE(std::abs(q.b), q.gap_h0 * 10.0 + 1e-12);
}
