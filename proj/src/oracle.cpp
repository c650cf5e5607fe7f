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

#include "stochmin/oracle.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include <Eigen/LU>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "stochmin/errors.hpp"

namespace stochmin {

int TreeProblem::level_of(int node) {
  int level = 0;
  for (unsigned v = static_cast<unsigned>(node) + 1; v > 1; v >>= 1) ++level;
  return level;
}

double TreeProblem::probability(int node) const {
  return std::ldexp(1.0, -level_of(node));
}

double TreeProblem::brownian(int node) const {
  const double step = std::sqrt(dt);
  double w = 0.0;
  for (int c = node; c > 0; c = (c - 1) / 2) w += (c % 2 == 1) ? step : -step;
  return w;
}

TreeProblem build_tree_problem(const ProblemSpec& spec, int depth, const TreeOptions& options) {
  if (depth < 1 || depth > kMaxTreeDepth) {
    throw Error(ErrorCode::kInvalidArgument,
                "tree depth must lie in [1, " + std::to_string(kMaxTreeDepth) + "]");
  }
  TreeProblem tree;
  tree.n = spec.n;
  tree.m = spec.m;
  tree.depth = depth;
  tree.horizon = spec.grid.horizon();
  tree.dt = tree.horizon / depth;
  tree.x0 = spec.x0;
  const TimeGrid levels(tree.horizon, depth);
  for (int k = 0; k < depth; ++k) {
    const double t = levels.t(k);
    const Matrix& D = spec.D.at(t);
    const Matrix M = options.factor ? options.factor(D) : build_M(D);
    const NodeBlocks b =
        decompose_node(spec.A.at(t), spec.B.at(t), spec.C.at(t), D, spec.R.at(t), M);
    TreeLevel lv{b.A, b.C, b.F, b.G, b.H(), b.R, b.M, Matrix()};
    if (options.Q) lv.Q = options.Q->at(t);
    tree.level.push_back(std::move(lv));
  }
  if (!options.leaf_values.empty()) {
    if (static_cast<int>(options.leaf_values.size()) != tree.leaves()) {
      throw Error(ErrorCode::kShapeMismatch, "one leaf value per leaf expected");
    }
    tree.leaf_target = options.leaf_values;
  } else {
    tree.leaf_target.reserve(tree.leaves());
    for (int j = 0; j < tree.leaves(); ++j) {
      tree.leaf_target.push_back(spec.target.evaluate(tree.brownian(tree.internal_nodes() + j)));
    }
  }
  return tree;
}

namespace {

using Sparse = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr double kRegularization = 1e-8;
constexpr double kFeasibilityTolerance = 1e-6;

/// Edge maps x_child = E x + U w for the child with sign s.
struct Edge {
  Matrix E, U;
};

Edge edge(const TreeProblem& tree, int level, double s) {
  const TreeLevel& lv = tree.level[static_cast<std::size_t>(level)];
  const double h = tree.dt;
  const double r = s * std::sqrt(h);
  Edge e;
  const Matrix I = Matrix::Identity(tree.n, tree.n);
  e.E = I + lv.A * h + lv.C * r;
  e.U.resize(tree.n, tree.m);
  e.U << lv.G * h + r * I, lv.F * h;
  return e;
}

struct Kkt {
  Sparse K;  // unregularized, both triangles
  Vector rhs;
  int primal = 0;
  int dual = 0;
};

/// Builds the KKT system for
///   min sum_i c_i [w_i' W_i w_i - 2 w_i' W_i anchor_i + x_i' Q x_i]
/// over internal-node controls w and internal non-root states x, subject to
/// the edge dynamics and the leaf targets. c_i = 2^(depth - level) is the
/// probability-weighted cost scaled to be integral. With anchor == nullptr
/// W_i is the level's H; otherwise W_i = I and Q is ignored.
Kkt assemble(const TreeProblem& tree, const std::vector<Vector>* anchor) {
  const int n = tree.n;
  const int m = tree.m;
  const int internal = tree.internal_nodes();
  const int total = tree.total_nodes();
  const int w_size = internal * m;
  const int x_size = (internal - 1) * n;
  Kkt kkt;
  kkt.primal = w_size + x_size;
  kkt.dual = (total - 1) * n;
  const int size = kkt.primal + kkt.dual;
  kkt.rhs = Vector::Zero(size);
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(internal) * (m * m + n * n) +
               static_cast<std::size_t>(total) * 2 * n * (n + m + 1));
  const auto w_index = [m](int node) { return node * m; };
  const auto x_index = [w_size, n](int node) { return w_size + (node - 1) * n; };
  const bool use_state_cost = anchor == nullptr && tree.has_state_cost();

  std::vector<Edge> edges;
  for (int k = 0; k < tree.depth; ++k) {
    edges.push_back(edge(tree, k, 1.0));
    edges.push_back(edge(tree, k, -1.0));
  }

  for (int i = 0; i < internal; ++i) {
    const int level = TreeProblem::level_of(i);
    const TreeLevel& lv = tree.level[static_cast<std::size_t>(level)];
    const double c = std::ldexp(1.0, tree.depth - level);
    const Matrix W = anchor ? Matrix::Identity(m, m) : lv.H;
    for (int r = 0; r < m; ++r) {
      for (int s = 0; s < m; ++s) {
        if (W(r, s) != 0.0) trip.emplace_back(w_index(i) + r, w_index(i) + s, 2.0 * c * W(r, s));
      }
    }
    if (anchor) {
      kkt.rhs.segment(w_index(i), m) = 2.0 * c * (*anchor)[static_cast<std::size_t>(i)];
    }
    if (use_state_cost && i > 0) {
      for (int r = 0; r < n; ++r) {
        for (int s = 0; s < n; ++s) {
          if (lv.Q(r, s) != 0.0) {
            trip.emplace_back(x_index(i) + r, x_index(i) + s, 2.0 * c * lv.Q(r, s));
          }
        }
      }
    }
  }

  // Constraint rows, one block per non-root node:
  //   internal child: x_c - E x_p - U w_p = 0
  //   leaf child:     E x_p + U w_p = xi
  // with E x_p moved to the right-hand side when p is the root.
  for (int c = 1; c < total; ++c) {
    const int p = (c - 1) / 2;
    const int level = TreeProblem::level_of(p);
    const Edge& e = edges[static_cast<std::size_t>(2 * level + (c % 2 == 1 ? 0 : 1))];
    const bool leaf = c >= internal;
    const double sign = leaf ? 1.0 : -1.0;
    const int row = kkt.primal + (c - 1) * n;
    const auto put = [&](int r, int col, double value) {
      if (value == 0.0) return;
      trip.emplace_back(row + r, col, value);
      trip.emplace_back(col, row + r, value);
    };
    for (int r = 0; r < n; ++r) {
      if (!leaf) put(r, x_index(c) + r, 1.0);
      for (int s = 0; s < m; ++s) put(r, w_index(p) + s, sign * e.U(r, s));
      if (p > 0) {
        for (int s = 0; s < n; ++s) put(r, x_index(p) + s, sign * e.E(r, s));
      }
    }
    Vector rhs = Vector::Zero(n);
    if (leaf) rhs = tree.leaf_target[static_cast<std::size_t>(c - internal)];
    if (p == 0) rhs -= sign * e.E * tree.x0;
    kkt.rhs.segment(row, n) = rhs;
  }
  kkt.K.resize(size, size);
  kkt.K.setFromTriplets(trip.begin(), trip.end());
  return kkt;
}

struct KktResult {
  Vector solution;
  double kkt_residual = 0.0;
  double constraint_residual = 0.0;
};

KktResult solve_kkt(const Kkt& kkt) {
  const int size = kkt.primal + kkt.dual;
  Sparse reg(size, size);
  {
    std::vector<Triplet> diag;
    diag.reserve(size);
    for (int i = 0; i < size; ++i) {
      diag.emplace_back(i, i, i < kkt.primal ? kRegularization : -kRegularization);
    }
    reg.setFromTriplets(diag.begin(), diag.end());
  }
  const Sparse K = kkt.K + reg;
  Eigen::SimplicialLDLT<Sparse, Eigen::Lower> ldlt;
  ldlt.compute(K);
  if (ldlt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularKkt, "factorization of the KKT system failed");
  }
  // Residuals are measured per block (stationarity rows, constraint rows),
  // each relative to its own right-hand side, so that the large objective
  // weights do not mask constraint error.
  const double primal_scale = std::max(1.0, kkt.rhs.head(kkt.primal).cwiseAbs().maxCoeff());
  const double dual_scale = std::max(1.0, kkt.rhs.tail(kkt.dual).cwiseAbs().maxCoeff());
  const auto measure = [&](const Vector& r) {
    return std::max(r.head(kkt.primal).cwiseAbs().maxCoeff() / primal_scale,
                    r.tail(kkt.dual).cwiseAbs().maxCoeff() / dual_scale);
  };
  KktResult out;
  out.solution = ldlt.solve(kkt.rhs);
  Vector residual = kkt.rhs - kkt.K * out.solution;
  double error = measure(residual);
  for (int it = 0; it < 30 && error > 1e-15; ++it) {
    const Vector candidate = out.solution + ldlt.solve(residual);
    const Vector next = kkt.rhs - kkt.K * candidate;
    const double next_error = measure(next);
    if (!(next_error < error)) break;
    out.solution = candidate;
    residual = next;
    error = next_error;
  }
  if (!out.solution.allFinite()) {
    throw Error(ErrorCode::kSingularKkt, "KKT solve produced non-finite values");
  }
  out.kkt_residual = error;
  out.constraint_residual = residual.tail(kkt.dual).cwiseAbs().maxCoeff() / dual_scale;
  return out;
}

TreeSolution finish(const TreeProblem& tree, const Kkt& kkt, const KktResult& res) {
  if (res.constraint_residual > kFeasibilityTolerance) {
    throw Error(ErrorCode::kInfeasible,
                "leaf targets are not reachable (constraint residual " +
                    std::to_string(res.constraint_residual) + ")");
  }
  if (res.kkt_residual > kKktTolerance) {
    throw Error(ErrorCode::kSingularKkt,
                "KKT residual " + std::to_string(res.kkt_residual) + " above tolerance");
  }
  TreeSolution sol;
  const int internal = tree.internal_nodes();
  sol.w.resize(internal);
  for (int i = 0; i < internal; ++i) sol.w[i] = res.solution.segment(i * tree.m, tree.m);
  sol.x = tree_states(tree, sol.w);
  sol.multipliers.resize(tree.leaves());
  for (int j = 0; j < tree.leaves(); ++j) {
    sol.multipliers[j] = res.solution.segment(kkt.primal + (internal + j - 1) * tree.n, tree.n);
  }
  sol.J = tree_cost(tree, sol.w);
  sol.kkt_residual = res.kkt_residual;
  double leaf_gap = 0.0;
  for (int j = 0; j < tree.leaves(); ++j) {
    const Vector& target = tree.leaf_target[static_cast<std::size_t>(j)];
    leaf_gap = std::max(leaf_gap, (sol.x[internal + j] - target).cwiseAbs().maxCoeff() /
                                      std::max(1.0, target.cwiseAbs().maxCoeff()));
  }
  sol.constraint_residual = leaf_gap;
  return sol;
}

}  // namespace

std::vector<Vector> tree_states(const TreeProblem& tree, const std::vector<Vector>& w) {
  if (static_cast<int>(w.size()) != tree.internal_nodes()) {
    throw Error(ErrorCode::kShapeMismatch, "one control per internal node expected");
  }
  std::vector<Edge> edges;
  for (int k = 0; k < tree.depth; ++k) {
    edges.push_back(edge(tree, k, 1.0));
    edges.push_back(edge(tree, k, -1.0));
  }
  std::vector<Vector> x(tree.total_nodes());
  x[0] = tree.x0;
  for (int i = 0; i < tree.internal_nodes(); ++i) {
    const int level = TreeProblem::level_of(i);
    for (int s = 0; s < 2; ++s) {
      const Edge& e = edges[static_cast<std::size_t>(2 * level + s)];
      x[2 * i + 1 + s] = e.E * x[i] + e.U * w[i];
    }
  }
  return x;
}

double tree_cost(const TreeProblem& tree, const std::vector<Vector>& w) {
  const std::vector<Vector> x = tree.has_state_cost() ? tree_states(tree, w) : std::vector<Vector>();
  std::vector<double> terms(tree.internal_nodes());
  for (int i = 0; i < tree.internal_nodes(); ++i) {
    const TreeLevel& lv = tree.level[static_cast<std::size_t>(TreeProblem::level_of(i))];
    double c = w[i].dot(lv.H * w[i]);
    if (tree.has_state_cost()) c += x[i].dot(lv.Q * x[i]);
    terms[i] = tree.probability(i) * tree.dt * c;
  }
  return pairwise_sum(terms);
}

double tree_cost_u(const TreeProblem& tree, const std::vector<Vector>& w) {
  const std::vector<Vector> x = tree.has_state_cost() ? tree_states(tree, w) : std::vector<Vector>();
  std::vector<double> terms(tree.internal_nodes());
  for (int i = 0; i < tree.internal_nodes(); ++i) {
    const TreeLevel& lv = tree.level[static_cast<std::size_t>(TreeProblem::level_of(i))];
    const Vector u = lv.M * w[i];
    double c = u.dot(lv.R * u);
    if (tree.has_state_cost()) c += x[i].dot(lv.Q * x[i]);
    terms[i] = tree.probability(i) * tree.dt * c;
  }
  return pairwise_sum(terms);
}

TreeSolution solve_tree_qp(const TreeProblem& tree) {
  const Kkt kkt = assemble(tree, nullptr);
  return finish(tree, kkt, solve_kkt(kkt));
}

TreeSolution random_feasible_point(const TreeProblem& tree, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<Vector> anchor(tree.internal_nodes(), Vector(tree.m));
  for (Vector& a : anchor) {
    for (Eigen::Index j = 0; j < a.size(); ++j) a(j) = normal(rng);
  }
  const Kkt kkt = assemble(tree, &anchor);
  return finish(tree, kkt, solve_kkt(kkt));
}

TreeIdentityReport tree_identity_checks(const TreeProblem& tree, const TreeSolution& optimal,
                                        const TreeSolution& competitor, GammaChoice gamma,
                                        std::uint64_t seed) {
  const int n = tree.n;
  const int internal = tree.internal_nodes();
  const double h = tree.dt;
  const double r = std::sqrt(h);
  const Matrix I = Matrix::Identity(n, n);

  // Per-level discrete propagator factors: Phi_child = Phi (I + a h + b s r).
  std::vector<Matrix> a(tree.depth), b(tree.depth);
  for (int k = 0; k < tree.depth; ++k) {
    const TreeLevel& lv = tree.level[static_cast<std::size_t>(k)];
    const Matrix AG = lv.A - lv.G * lv.C;
    a[k] = -AG * (I + AG * h).inverse();
    b[k] = -(I + a[k] * h) * lv.G;
  }
  Vector c = Vector::Zero(n);
  Vector d = Vector::Zero(n);
  if (gamma == GammaChoice::kRandom) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (int i = 0; i < n; ++i) c(i) = normal(rng);
    for (int i = 0; i < n; ++i) d(i) = normal(rng);
  }

  std::vector<Matrix> phi(internal);
  std::vector<Vector> big_gamma(internal);
  phi[0] = I;
  big_gamma[0] = Vector::Zero(n);
  Vector lemma1 = Vector::Zero(n);
  std::vector<double> lhs(internal), rhs(internal), orth(internal), quad(internal);
  for (int i = 0; i < internal; ++i) {
    const int k = TreeProblem::level_of(i);
    const TreeLevel& lv = tree.level[static_cast<std::size_t>(k)];
    const double weight = tree.probability(i) * h;
    const Vector dw = competitor.w[i] - optimal.w[i];
    const Vector dz = dw.head(n);
    const Vector dv = dw.tail(tree.m - n);
    const Matrix phi_hat = phi[i] * (I + a[k] * h);
    const Matrix phi_inv_t = phi[i].transpose().inverse();
    const Vector g2 = gamma == GammaChoice::kOptimal
                          ? Vector(phi_inv_t * (lv.H * optimal.w[i]).head(n))
                          : Vector(c + d * tree.brownian(i));
    const Vector g1 = -phi_inv_t * ((I + a[k] * h) * lv.C + b[k] * (I + lv.A * h)).transpose() *
                      phi[i].transpose() * g2;
    lemma1 -= weight * phi_hat * lv.F * dv;
    lhs[i] = weight * g2.dot(phi[i] * (I + a[k] * h + b[k] * lv.G * h) * dz);
    rhs[i] = -weight * ((big_gamma[i] + g1 * h).dot(phi_hat * lv.F * dv) +
                        g2.dot(phi[i] * b[k] * lv.F * dv) * h);
    orth[i] = weight * (lv.H * optimal.w[i]).dot(dw);
    quad[i] = weight * dw.dot(lv.H * dw);
    if (tree.has_state_cost()) {
      const Vector dx = competitor.x[i] - optimal.x[i];
      orth[i] += weight * (lv.Q * optimal.x[i]).dot(dx);
      quad[i] += weight * dx.dot(lv.Q * dx);
    }
    for (int s = 0; s < 2; ++s) {
      const int child = 2 * i + 1 + s;
      if (child >= internal) continue;
      const double sign = s == 0 ? 1.0 : -1.0;
      phi[child] = phi[i] * (I + a[k] * h + b[k] * sign * r);
      big_gamma[child] = big_gamma[i] + g1 * h + g2 * sign * r;
    }
  }
  TreeIdentityReport rep;
  rep.lemma1 = lemma1.cwiseAbs().maxCoeff();
  rep.lemma2_lhs = pairwise_sum(lhs);
  rep.lemma2_rhs = pairwise_sum(rhs);
  rep.lemma2_residual = std::abs(rep.lemma2_lhs - rep.lemma2_rhs);
  rep.orthogonality = std::abs(pairwise_sum(orth));
  rep.excess_identity =
      std::abs(tree_cost(tree, competitor.w) - tree_cost(tree, optimal.w) - pairwise_sum(quad));
  return rep;
}

OracleComparison compare_with_solver(const TreeProblem& tree, const TreeSolution& tree_sol,
                                     const SolverSummary& solver, std::uint64_t seed) {
  OracleComparison cmp;
  cmp.J_tree = tree_sol.J;
  cmp.J_solver = solver.J;
  cmp.abs_gap = std::abs(cmp.J_tree - cmp.J_solver);
  cmp.rel_gap = cmp.abs_gap / std::max(std::abs(cmp.J_tree), 1e-300);
  cmp.root_gap = (solver.z0 - tree_sol.z(0, tree.n)).norm() +
                 (solver.v0 - tree_sol.v(0, tree.n)).norm();
  cmp.sqrt_dt = std::sqrt(tree.dt);
  cmp.kkt_residual = tree_sol.kkt_residual;
  const TreeSolution competitor = random_feasible_point(tree, seed);
  cmp.excess_identity_residual =
      tree_identity_checks(tree, tree_sol, competitor).excess_identity;
  return cmp;
}

void dump_qp(const TreeProblem& tree, std::ostream& out) {
  const Kkt kkt = assemble(tree, nullptr);
  out << "# stochmin-kkt " << kkt.primal << " " << kkt.dual << "\n";
  out.precision(17);
  for (int col = 0; col < kkt.K.outerSize(); ++col) {
    for (Sparse::InnerIterator it(kkt.K, col); it; ++it) {
      if (it.row() >= it.col()) out << "K " << it.row() << " " << it.col() << " " << it.value() << "\n";
    }
  }
  for (Eigen::Index i = 0; i < kkt.rhs.size(); ++i) {
    if (kkt.rhs(i) != 0.0) out << "r " << i << " " << kkt.rhs(i) << "\n";
  }
}

}  // namespace stochmin
