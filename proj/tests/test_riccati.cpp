/*
 Copyright 2026 The stochmin Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <gtest/gtest.h>

#include <cmath>

#include "stochmin/decomposition.hpp"
#include "stochmin/riccati.hpp"
#include "support.hpp"

namespace stochmin {
namespace {

using testing::config_path;
using testing::mat;

TEST(SolvePbar, FlagshipIsLinear) {
  const RiccatiSolution sol = solve_pbar(decompose(testing::flagship(100)));
  for (int k = 0; k <= 100; ++k) {
    EXPECT_NEAR(sol.Pbar[k](0, 0), 1.0 - sol.grid.t(k), 1e-12);
  }
  EXPECT_EQ(sol.Pbar.back()(0, 0), 0.0);
  EXPECT_NEAR(sol.min_eig_at_0, 1.0, 1e-12);
  EXPECT_TRUE(sol.psd);
  // Hermite midpoint is exact for a linear solution.
  EXPECT_NEAR(sol.Pbar_mid[0](0, 0), 1.0 - 0.005, 1e-12);
}

TEST(SolvePbar, GrowsLinearlyWithHorizon) {
  for (double T : {0.5, 2.0, 3.0}) {
    const RiccatiSolution sol = solve_pbar(decompose(testing::flagship(200, 0, 0, 1, T)));
    EXPECT_NEAR(sol.Pbar.front()(0, 0), T, 1e-8);
  }
}

TEST(SolvePbar, ZeroWhenNoActuationReachesTheState) {
  // m = n with G = 0: F is empty and Bbar = 0.
  ProblemSpec s = testing::flagship(50);
  s.m = 1;
  s.A = MatrixPath(mat(1, 1, {0.4}));
  s.C = MatrixPath(mat(1, 1, {-0.3}));
  s.B = MatrixPath(mat(1, 1, {0.0}));
  s.D = MatrixPath(mat(1, 1, {1.0}));
  s.R = MatrixPath(mat(1, 1, {1.0}));
  const RiccatiSolution sol = solve_pbar(decompose(s));
  for (const Matrix& P : sol.Pbar) EXPECT_EQ(P(0, 0), 0.0);
  const ControllabilityVerdict v = controllability_test(sol);
  EXPECT_FALSE(v.controllable);
  EXPECT_EQ(v.margin, 0.0);
}

TEST(SolvePbar, SymmetricPsdOnRandomInstances) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const RiccatiSolution sol = solve_pbar(decompose(testing::random_instance(seed, 200)));
    EXPECT_TRUE(sol.psd) << seed;
    EXPECT_LE(sol.symmetric_residual, 1e-9) << seed;
    EXPECT_TRUE(sol.Pbar.back().isZero(0.0));
  }
}

TEST(SolvePbar, FourthOrderSelfConvergence) {
  ProblemSpec base = testing::random_instance(3, 16);
  for (std::uint64_t s = 4; base.n != 2; ++s) base = testing::random_instance(s, 16);
  const auto p0 = [&](int N) { return solve_pbar(decompose(base.with_steps(N))).Pbar.front(); };
  const Matrix a = p0(16), b = p0(32), c = p0(64);
  const double ratio = (a - b).cwiseAbs().maxCoeff() / (b - c).cwiseAbs().maxCoeff();
  EXPECT_GT(ratio, 12.0);
  EXPECT_LT(ratio, 20.0);
}

TEST(SolvePbar, RhsVanishesOnTheFlagshipSolutionUpToTheConstant) {
  const NodeBlocks b = decompose(testing::flagship(4)).node.front();
  for (double P : {0.0, 0.3, 1.0}) {
    EXPECT_NEAR(pbar_rhs(b, mat(1, 1, {P}))(0, 0), -1.0, 1e-15);
  }
}

TEST(Controllability, Flagship) {
  const ControllabilityVerdict v =
      controllability_test(solve_pbar(decompose(testing::flagship(100))));
  EXPECT_TRUE(v.controllable);
  EXPECT_NEAR(v.margin, 1.0, 1e-12);
}

TEST(Controllability, PartialActuation) {
  const ProblemSpec s = load_problem_file(config_path("partial.json"));
  const RiccatiSolution sol = solve_pbar(decompose(s));
  const Matrix& P0 = sol.Pbar.front();
  EXPECT_NEAR(P0(0, 0), s.grid.horizon(), 1e-10);
  EXPECT_NEAR(P0(1, 1), 0.0, 1e-12);
  EXPECT_NEAR(P0(0, 1), 0.0, 1e-12);
  const ControllabilityVerdict v = controllability_test(sol);
  EXPECT_FALSE(v.controllable);
  EXPECT_NEAR(v.margin, 0.0, 1e-12);
}

TEST(Controllability, SwitchingInstance) {
  const ProblemSpec s = load_problem_file(config_path("switching.json"));
  EXPECT_TRUE(controllability_test(solve_pbar(decompose(s))).controllable);
}

TEST(LqRiccati, ZeroStateWeight) {
  const ProblemSpec s = testing::flagship(50);
  const LqRiccatiSolution sol = solve_lq_riccati(s, MatrixPath(Matrix::Zero(1, 1)));
  for (std::size_t k = 0; k < sol.P.size(); ++k) {
    EXPECT_EQ(sol.P[k](0, 0), 0.0);
    EXPECT_TRUE(sol.gain[k].isZero(0.0));
  }
}

TEST(LqRiccati, FlagshipTanh) {
  const ProblemSpec s = testing::flagship(200);
  const LqRiccatiSolution sol = solve_lq_riccati(s, MatrixPath(Matrix::Identity(1, 1)));
  for (int k = 0; k <= 200; ++k) {
    const double P = std::tanh(1.0 - s.grid.t(k));
    EXPECT_NEAR(sol.P[k](0, 0), P, 1e-9);
    // gain = (D'PD + R)^-1 (B'P + D'PC) with B = [0, 1], C = 0.
    EXPECT_NEAR(sol.gain[k](0, 0), 0.0, 1e-15);
    EXPECT_NEAR(sol.gain[k](1, 0), sol.P[k](0, 0), 1e-15);
  }
  EXPECT_GE(sol.min_weight_eig, 1.0 - 1e-12);
}

TEST(LqRiccati, FourthOrderSelfConvergence) {
  ProblemSpec base = testing::random_instance(3, 16);
  for (std::uint64_t s = 4; base.n != 2; ++s) base = testing::random_instance(s, 16);
  const MatrixPath Q(mat(2, 2, {1.0, 0.2, 0.2, 0.5}));
  const auto p0 = [&](int N) { return solve_lq_riccati(base.with_steps(N), Q).P.front(); };
  const Matrix a = p0(16), b = p0(32), c = p0(64);
  const double ratio = (a - b).cwiseAbs().maxCoeff() / (b - c).cwiseAbs().maxCoeff();
  EXPECT_GT(ratio, 12.0);
  EXPECT_LT(ratio, 20.0);
}

}  // namespace
}  // namespace stochmin
