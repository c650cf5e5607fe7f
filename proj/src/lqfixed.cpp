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

#include "stochmin/lqfixed.hpp"

#include <cmath>

#include "stochmin/errors.hpp"

namespace stochmin {

LqFixedProblem load_lq_problem(std::string_view document) {
  LqFixedProblem prob;
  prob.base = load_problem(document);
  const nlohmann::json doc = nlohmann::json::parse(document.begin(), document.end());
  const auto q = doc.find("Q");
  if (q == doc.end()) throw Error(ErrorCode::kMissingField, "missing field 'Q'");
  prob.Q = parse_matrix_path(*q, "Q", prob.base.grid, prob.base.n, prob.base.n);
  return prob;
}

ValidationReport validate_lq(const LqFixedProblem& prob) {
  ValidationReport report = validate(prob.base);
  const TimeGrid& grid = prob.base.grid;
  for (int k = 0; k < grid.nodes(); ++k) {
    const Matrix& Q = prob.Q.at(grid.t(k));
    if (!Q.allFinite()) {
      report.add("NON_FINITE", "Q has non-finite entries", k);
      continue;
    }
    const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
    if (asymmetry(Q) > 1e-12 * scale) report.add("Q_NOT_SYMMETRIC", "Q is not symmetric", k);
    if (min_eigenvalue(Q) < -1e-10 * scale) {
      report.add("Q_NOT_PSD", "Q is not positive semidefinite", k);
    }
  }
  return report;
}

LqTransform lq_transform(const LqFixedProblem& prob) {
  const ProblemSpec& base = prob.base;
  const TimeGrid& grid = base.grid;
  LqTransform out;
  out.riccati = solve_lq_riccati(base, prob.Q);
  std::vector<Matrix> A(grid.nodes()), C(grid.nodes()), R(grid.nodes());
  for (int k = 0; k < grid.nodes(); ++k) {
    const double t = grid.t(k);
    const Matrix& gain = out.riccati.gain[k];
    const Matrix& D = base.D.at(t);
    A[k] = base.A.at(t) - base.B.at(t) * gain;
    C[k] = base.C.at(t) - D * gain;
    R[k] = symmetrize(D.transpose() * out.riccati.P[k] * D + base.R.at(t));
  }
  out.transformed = base;
  out.transformed.A = MatrixPath::from_nodes(grid, A);
  out.transformed.C = MatrixPath::from_nodes(grid, C);
  out.transformed.R = MatrixPath::from_nodes(grid, R);
  return out;
}

LqFixedSolution solve_lq_fixed(const LqFixedProblem& prob, const BrownianBatch& paths,
                               const EvaluationOptions& options) {
  const ValidationReport report = validate_lq(prob);
  if (!report.pass()) {
    throw Error(ErrorCode::kValidationFailed,
                "LQ problem failed validation: " + report.findings.front().code);
  }
  LqTransform tr = lq_transform(prob);
  LqFixedSolution sol;
  sol.lq_riccati = std::move(tr.riccati);
  sol.transformed = std::move(tr.transformed);
  sol.inner = solve_minimum_energy(sol.transformed);

  const ProblemSpec& base = prob.base;
  const Decomposition base_dec = decompose(base);
  const int N = base.grid.steps();
  const double dt = base.grid.dt();
  const Vector& x0 = base.x0;
  sol.initial_cost = x0.dot(sol.lq_riccati.P.front() * x0);
  std::vector<double> differences;
  differences.reserve(paths.paths());

  EvaluationOptions inner_options = options;
  inner_options.observer = [&](const HamiltonianRun& run, const PathField& x,
                               const BrownianBatch& part) {
    PathField u(part.paths(), N + 1, base.m);
    for (int p = 0; p < part.paths(); ++p) {
      for (int k = 0; k <= N; ++k) {
        u.at(p, k) = run.u.at(p, k) - sol.lq_riccati.gain[k] * x.at(p, k);
      }
    }
    const PathField replay = euler_state_u(base_dec, x0, u, part);
    sol.state_replay_gap = std::max(sol.state_replay_gap, replay.max_abs_difference(x));
    for (int p = 0; p < part.paths(); ++p) {
      double original = 0.0;
      double shifted = 0.0;
      for (int k = 0; k < N; ++k) {
        const NodeBlocks& b = base_dec.node[static_cast<std::size_t>(k)];
        const auto xk = x.at(p, k);
        const auto uk = u.at(p, k);
        const auto hk = run.u.at(p, k);
        original += (xk.dot(prob.Q.at(base.grid.t(k)) * xk) + uk.dot(b.R * uk)) * dt;
        shifted += hk.dot(sol.inner.dec.node[static_cast<std::size_t>(k)].R * hk) * dt;
      }
      differences.push_back(original - sol.initial_cost - shifted);
    }
    if (options.observer) options.observer(run, x, part);
  };
  sol.evaluation = evaluate_closed_loop(sol.inner, paths, inner_options);
  sol.inner_cost = sol.evaluation.energy.mean;
  sol.inner_cost_standard_error = sol.evaluation.energy.standard_error;
  sol.total_cost = sol.initial_cost + sol.inner_cost;
  const MeanStdError c = mean_and_standard_error(differences);
  sol.completion = {c.mean, c.standard_error};
  return sol;
}

}  // namespace stochmin
