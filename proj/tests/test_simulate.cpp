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
#include <cstdlib>

#include "stochmin/brownian.hpp"
#include "stochmin/decomposition.hpp"
#include "stochmin/errors.hpp"
#include "stochmin/hamiltonian.hpp"
#include "stochmin/pipeline.hpp"
#include "stochmin/simulate.hpp"
#include "support.hpp"

namespace stochmin {
namespace {

using testing::config_path;

PathField constant_field(int paths, int nodes, const Vector& value) {
  PathField f(paths, nodes, static_cast<int>(value.size()));
  for (int p = 0; p < paths; ++p) {
    for (int k = 0; k < nodes; ++k) f.at(p, k) = value;
  }
  return f;
}

bool same_increments(const BrownianBatch& a, const BrownianBatch& b) {
  if (a.paths() != b.paths() || a.steps() != b.steps()) return false;
  for (int p = 0; p < a.paths(); ++p) {
    for (int k = 0; k < a.steps(); ++k) {
      if (a.increment(p, k) != b.increment(p, k)) return false;
    }
  }
  return true;
}

TEST(GeneratePaths, SeedDeterminesTheBatch) {
  const TimeGrid g(1.0, 50);
  EXPECT_TRUE(same_increments(generate_paths(g, 100, 4), generate_paths(g, 100, 4)));
  EXPECT_FALSE(same_increments(generate_paths(g, 100, 4), generate_paths(g, 100, 5)));
}

TEST(GeneratePaths, AntitheticPairsCancel) {
  const TimeGrid g(1.0, 30);
  const BrownianBatch b = generate_paths(g, 40, 8, true);
  for (int p = 0; p < 40; p += 2) {
    for (int k = 0; k < 30; ++k) EXPECT_EQ(b.increment(p, k) + b.increment(p + 1, k), 0.0);
  }
  EXPECT_THROW(generate_paths(g, 3, 8, true), Error);
}

TEST(GeneratePaths, TerminalVarianceIsTheHorizon) {
  const double T = 1.5;
  const BrownianBatch b = generate_paths(TimeGrid(T, 20), 100000, 21);
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (int p = 0; p < b.paths(); ++p) {
    const double w = b.terminal(p);
    sum += w;
    sum2 += w * w;
    sum4 += w * w * w * w;
  }
  const double n = b.paths();
  const double var = sum2 / n - (sum / n) * (sum / n);
  const double se = std::sqrt((sum4 / n - (sum2 / n) * (sum2 / n)) / n);
  EXPECT_LE(std::abs(var - T), 3.0 * se);
}

TEST(GeneratePaths, RangesAndSlicesMatchTheFullBatch) {
  const TimeGrid g(1.0, 16);
  const BrownianBatch full = generate_paths(g, 64, 13, true);
  EXPECT_TRUE(same_increments(full.slice(10, 20), generate_path_range(g, 10, 20, 13, true)));
  EXPECT_EQ(full.slice(10, 20).first_path(), 10);
}

TEST(GeneratePaths, IndependentOfThreadCount) {
  const TimeGrid g(1.0, 100);
  ::setenv("STOCHMIN_THREADS", "1", 1);
  const BrownianBatch one = generate_paths(g, 500, 3);
  ::setenv("STOCHMIN_THREADS", "4", 1);
  const BrownianBatch four = generate_paths(g, 500, 3);
  ::unsetenv("STOCHMIN_THREADS");
  EXPECT_TRUE(same_increments(one, four));
}

TEST(BrownianBatch, CoarsenSumsAdjacentSteps) {
  const BrownianBatch b = generate_paths(TimeGrid(1.0, 8), 3, 2);
  const BrownianBatch c = b.coarsen();
  EXPECT_EQ(c.steps(), 4);
  for (int p = 0; p < 3; ++p) {
    for (int k = 0; k < 4; ++k) {
      EXPECT_EQ(c.increment(p, k), b.increment(p, 2 * k) + b.increment(p, 2 * k + 1));
    }
    EXPECT_NEAR(c.terminal(p), b.terminal(p), 1e-14);
  }
}

TEST(ParallelFor, PropagatesExceptions) {
  ::setenv("STOCHMIN_THREADS", "3", 1);
  EXPECT_THROW(parallel_for(10, [](int i) { if (i == 7) throw std::runtime_error("x"); }),
               std::runtime_error);
  ::unsetenv("STOCHMIN_THREADS");
}

TEST(EulerState, ConstantWithoutDynamics) {
  ProblemSpec s = testing::flagship(20, 0.7);
  const Decomposition dec = decompose(s);
  const BrownianBatch b = generate_paths(s.grid, 5, 1);
  const PathField zero = constant_field(5, 21, Vector::Zero(1));
  const PathField x = euler_state(dec, s.x0, zero, zero, b);
  for (int p = 0; p < 5; ++p) {
    for (int k = 0; k <= 20; ++k) EXPECT_EQ(x.at(p, k)(0), 0.7);
  }
}

TEST(EulerState, DeterministicControlHitsTargetExactly) {
  const ProblemSpec s = testing::flagship(64, 0.5, 2.0, 0.0, 2.0);
  const Decomposition dec = decompose(s);
  const BrownianBatch b = generate_paths(s.grid, 5, 1);
  const PathField v = constant_field(5, 65, Vector::Constant(1, 0.75));
  const PathField z = constant_field(5, 65, Vector::Zero(1));
  const PathField x = euler_state(dec, s.x0, v, z, b);
  for (double e : terminal_squared_errors(x, s.target, b)) EXPECT_NEAR(e, 0.0, 1e-28);
  const EnergyEstimate E = estimate_energy(dec, v, z);
  EXPECT_NEAR(E.mean, 1.5 * 1.5 / 2.0, 1e-13);
  EXPECT_EQ(E.standard_error, 0.0);
}

TEST(EulerState, FlagshipTerminalErrorIsAtLeastFirstOrder) {
  const auto mse = [](int N) {
    const MinimumEnergySolution sol = solve_minimum_energy(testing::flagship(N));
    return evaluate_closed_loop(sol, generate_paths(sol.spec.grid, 4000, 6)).terminal_mse;
  };
  const double coarse = mse(100);
  const double fine = mse(200);
  EXPECT_LE(fine, coarse / 1.8);
  EXPECT_LE(coarse, 0.05 * 0.01);
}

TEST(EstimateEnergy, ZeroControls) {
  const ProblemSpec s = load_problem_file(config_path("switching.json")).with_steps(20);
  const Decomposition dec = decompose(s);
  const EnergyEstimate E = estimate_energy(dec, constant_field(3, 21, Vector::Zero(1)),
                                           constant_field(3, 21, Vector::Zero(2)));
  EXPECT_EQ(E.mean, 0.0);
  EXPECT_EQ(E.max_form_mismatch, 0.0);
}

TEST(EstimateEnergy, FlagshipIsLogTwo) {
  const MinimumEnergySolution sol = solve_minimum_energy(testing::flagship(500));
  const ClosedLoopEvaluation e = evaluate_closed_loop(sol, generate_paths(sol.spec.grid, 10000, 7));
  EXPECT_LE(std::abs(e.energy.mean - std::log(2.0)), 0.015 * std::log(2.0));
  EXPECT_LE(e.energy.max_form_mismatch, kCostFormTolerance);
}

TEST(EstimateEnergy, CostFormsAgreeOnRandomControls) {
  const ProblemSpec s = load_problem_file(config_path("switching.json")).with_steps(20);
  const Decomposition dec = decompose(s);
  PathField v(4, 21, 1), z(4, 21, 2);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  for (int p = 0; p < 4; ++p) {
    for (int k = 0; k <= 20; ++k) {
      v.at(p, k)(0) = normal(rng);
      z.at(p, k) << normal(rng), normal(rng);
    }
  }
  EXPECT_LE(estimate_energy(dec, v, z).max_form_mismatch, kCostFormTolerance);
}

TEST(Gramian, EmptyActuation) {
  const ProblemSpec s = load_problem_file(config_path("square.json")).with_steps(50);
  const GramianReport g = gramian_rank_mc(decompose(s), generate_paths(s.grid, 200, 1));
  EXPECT_EQ(g.rank, 0);
  EXPECT_EQ(g.gramian.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gramian, Flagship) {
  const ProblemSpec s = testing::flagship(50);
  const GramianReport g = gramian_rank_mc(decompose(s), generate_paths(s.grid, 200, 1));
  EXPECT_EQ(g.rank, 1);
  EXPECT_NEAR(g.gramian(0, 0), 1.0, 1e-12);
  EXPECT_EQ(g.paths_used, 200);
}

TEST(Gramian, PartialActuation) {
  const ProblemSpec s = load_problem_file(config_path("partial.json")).with_steps(50);
  const GramianReport g = gramian_rank_mc(decompose(s), generate_paths(s.grid, 200, 1));
  EXPECT_EQ(g.rank, 1);
  EXPECT_NEAR(g.gramian(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(g.gramian(1, 1), 0.0, 1e-14);
}

TEST(Gramian, RankWeightInvariance) {
  const ProblemSpec s = load_problem_file(config_path("switching.json")).with_steps(100);
  const Decomposition dec = decompose(s);
  const BrownianBatch b = generate_paths(s.grid, 2000, 3);
  const std::vector<Matrix> weight(s.grid.nodes(), Matrix::Constant(1, 1, 3.0));
  EXPECT_EQ(gramian_rank_mc(dec, b).rank, 2);
  EXPECT_EQ(gramian_rank_mc(dec, b, weight).rank, 2);
}

TEST(Propagator, StartsAtIdentity) {
  const ProblemSpec s = load_problem_file(config_path("switching.json")).with_steps(40);
  const Decomposition dec = decompose(s);
  const BrownianBatch b = generate_paths(s.grid, 2, 1);
  const auto phi = propagator_path(dec, b, 1);
  ASSERT_EQ(static_cast<int>(phi.size()), 41);
  EXPECT_EQ(phi.front(), Matrix(Matrix::Identity(2, 2)));
  const auto flat = propagator_path(decompose(testing::flagship(40)), b, 0);
  for (const Matrix& P : flat) EXPECT_EQ(P(0, 0), 1.0);
}

TEST(LemmaChecks, IdenticalPairsGiveZero) {
  const ProblemSpec s = load_problem_file(config_path("switching.json")).with_steps(100);
  const MinimumEnergySolution sol = solve_minimum_energy(s);
  const BrownianBatch b = generate_paths(s.grid, 500, 2);
  const HamiltonianRun run = run_hamiltonian(sol.loop, sol.K, b);
  const ControlPair pair{run.v, run.z};
  const LemmaReport r = lemma_identity_checks(sol.dec, s.x0, s.target, pair, pair, b);
  EXPECT_EQ(r.lemma1_mean.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(r.lemma2_lhs, 0.0);
  EXPECT_EQ(r.lemma2_rhs, 0.0);
  EXPECT_TRUE(r.lemma1_pass);
  EXPECT_TRUE(r.lemma2_pass);
  EXPECT_LE(r.inverse_residual, 1e-8);
}

TEST(LemmaChecks, RejectsInadmissiblePairs) {
  const ProblemSpec s = load_problem_file(config_path("switching.json")).with_steps(50);
  const MinimumEnergySolution sol = solve_minimum_energy(s);
  const BrownianBatch b = generate_paths(s.grid, 100, 2);
  const HamiltonianRun run = run_hamiltonian(sol.loop, sol.K, b);
  const ControlPair good{run.v, run.z};
  const ControlPair zero{constant_field(100, 51, Vector::Zero(1)),
                         constant_field(100, 51, Vector::Zero(2))};
  try {
    lemma_identity_checks(sol.dec, s.x0, s.target, good, zero, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotAdmissible);
  }
}

}  // namespace
}  // namespace stochmin
