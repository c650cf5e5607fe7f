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

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "stochmin/core.hpp"
#include "stochmin/decomposition.hpp"
#include "stochmin/simulate.hpp"

namespace stochmin {

/// Coefficient snapshot used on every edge leaving a tree level.
struct TreeLevel {
  Matrix A, C, F, G;
  /// [[H1, H2], [H2', H3]] in (z, v) coordinates.
  Matrix H;
  /// Original control weight and factorization, for u'Ru evaluation.
  Matrix R, M;
  /// State penalty; empty when the problem has none.
  Matrix Q;
};

/// Non-recombining binomial tree for the reformulated system. Nodes are in
/// heap order: root 0, children of i are 2i+1 (dW = +sqrt(dt)) and 2i+2
/// (dW = -sqrt(dt)); node i sits at level floor(log2(i+1)).
struct TreeProblem {
  int n = 0;
  int m = 0;
  int depth = 0;
  double horizon = 1.0;
  double dt = 1.0;
  Vector x0;
  std::vector<TreeLevel> level;
  /// Terminal targets, one per leaf in heap order.
  std::vector<Vector> leaf_target;

  int internal_nodes() const { return (1 << depth) - 1; }
  int total_nodes() const { return (1 << (depth + 1)) - 1; }
  int leaves() const { return 1 << depth; }
  bool has_state_cost() const { return level.front().Q.size() > 0; }
  static int level_of(int node);
  /// Probability of reaching node i.
  double probability(int node) const;
  /// Brownian value W at node i.
  double brownian(int node) const;
};

struct TreeOptions {
  /// Optional state penalty x'Qx added to the stage cost.
  std::optional<MatrixPath> Q;
  /// Override of build_M, e.g. to test invariance under the factorization.
  std::function<Matrix(const Matrix& D)> factor;
  /// Leaf values replacing the affine target a + b W_leaf.
  std::vector<Vector> leaf_values;
};

inline constexpr int kMaxTreeDepth = 14;

/// Coefficients at level k are those of the spec at t_k = k T / depth.
TreeProblem build_tree_problem(const ProblemSpec& spec, int depth,
                               const TreeOptions& options = {});

struct TreeSolution {
  /// (z, v) at internal nodes.
  std::vector<Vector> w;
  /// State at every node, leaves included.
  std::vector<Vector> x;
  /// Multipliers of the leaf constraints.
  std::vector<Vector> multipliers;
  double J = 0.0;
  double kkt_residual = 0.0;
  double constraint_residual = 0.0;

  Vector z(int node, int n) const { return w[node].head(n); }
  Vector v(int node, int n) const { return w[node].tail(w[node].size() - n); }
};

inline constexpr double kKktTolerance = 1e-8;

/// Exact equality-constrained QP over all node controls, solved through
/// the KKT system. Throws INFEASIBLE when the leaf targets are not
/// reachable and SINGULAR_KKT for other degeneracies.
TreeSolution solve_tree_qp(const TreeProblem& tree);

/// Feasible point closest (in the probability-weighted Euclidean metric) to
/// seeded random node controls of the given scale.
TreeSolution random_feasible_point(const TreeProblem& tree, std::uint64_t seed,
                                   double scale = 1.0);

/// States from the edge dynamics for given node controls.
std::vector<Vector> tree_states(const TreeProblem& tree,
                                const std::vector<Vector>& w);

/// Expected cost sum_k sum_nodes prob dt [w'Hw + x'Qx].
double tree_cost(const TreeProblem& tree, const std::vector<Vector>& w);

/// Same cost evaluated through u'Ru with u = M [z; v].
double tree_cost_u(const TreeProblem& tree, const std::vector<Vector>& w);

/// Discrete versions of the two lemmas, the orthogonality identity and the
/// excess-cost identity. All are exact on the tree, so the residuals are
/// at solver precision.
struct TreeIdentityReport {
  /// |E sum Phi_hat F (v1 - v2) dt|_inf.
  double lemma1 = 0.0;
  double lemma2_lhs = 0.0;
  double lemma2_rhs = 0.0;
  double lemma2_residual = 0.0;
  /// E sum (H w*)' (w - w*) dt.
  double orthogonality = 0.0;
  /// J(w) - J(w*) - E sum (w - w*)' H (w - w*) dt.
  double excess_identity = 0.0;
};

TreeIdentityReport tree_identity_checks(const TreeProblem& tree,
                                        const TreeSolution& optimal,
                                        const TreeSolution& competitor,
                                        GammaChoice gamma = GammaChoice::kOptimal,
                                        std::uint64_t seed = 1);

struct SolverSummary {
  double J = 0.0;
  /// Controls at t = 0 (deterministic on every path).
  Vector z0, v0;
};

struct OracleComparison {
  double J_tree = 0.0;
  double J_solver = 0.0;
  double abs_gap = 0.0;
  double rel_gap = 0.0;
  double root_gap = 0.0;
  double sqrt_dt = 0.0;
  double kkt_residual = 0.0;
  double excess_identity_residual = 0.0;
};

OracleComparison compare_with_solver(const TreeProblem& tree,
                                     const TreeSolution& tree_sol,
                                     const SolverSummary& solver,
                                     std::uint64_t seed = 1);

/// Writes the KKT system in coordinate text form:
///   # stochmin-kkt <primal> <dual>
///   K <row> <col> <value>      (lower triangle, 0-based)
///   r <row> <value>            (right-hand side, nonzeros only)
void dump_qp(const TreeProblem& tree, std::ostream& out);

}  // namespace stochmin
