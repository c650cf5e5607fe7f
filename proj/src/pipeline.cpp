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

#include "stochmin/pipeline.hpp"

#include <cmath>
#include <sstream>

#include "stochmin/errors.hpp"

namespace stochmin {

namespace {

[[noreturn]] void fail_report(const ValidationReport& report, const char* stage) {
  std::ostringstream msg;
  msg << stage << " failed:";
  for (const Finding& f : report.findings) {
    msg << " " << f.code;
    if (f.node >= 0) msg << "@" << f.node << (f.node_end > f.node ? "-" + std::to_string(f.node_end) : "");
  }
  throw Error(ErrorCode::kValidationFailed, msg.str());
}

MinimumEnergySolution finish(const ProblemSpec& spec, Decomposition dec) {
  const ValidationReport schur = schur_check(dec);
  if (!schur.pass()) fail_report(schur, "schur check");
  MinimumEnergySolution sol;
  sol.spec = spec;
  sol.dec = std::move(dec);
  sol.pbar = solve_pbar(sol.dec);
  sol.verdict = controllability_test(sol.pbar);
  sol.bsde = bsde_coefficients(sol.dec, sol.pbar);
  sol.pq = solve_pq_affine(sol.bsde, spec.target);
  sol.K = compute_K(sol.pbar, sol.pq, spec.x0);
  sol.loop = assemble_closed_loop(sol.dec, sol.pbar, sol.pq);
  return sol;
}

}  // namespace

SolverSummary MinimumEnergySolution::root_controls(double J) const {
  const NodeState s = reconstruct_node(loop.node.front(), K, 0.0);
  return SolverSummary{J, s.z, s.v};
}

MinimumEnergySolution solve_minimum_energy(const ProblemSpec& spec) {
  const ValidationReport report = validate(spec);
  if (!report.pass()) fail_report(report, "validation");
  return finish(spec, decompose(spec));
}

MinimumEnergySolution solve_minimum_energy(const ProblemSpec& spec,
                                           const std::vector<Matrix>& M) {
  const ValidationReport report = validate(spec);
  if (!report.pass()) fail_report(report, "validation");
  return finish(spec, decompose(spec, M));
}

ClosedLoopEvaluation evaluate_closed_loop(const MinimumEnergySolution& sol,
                                          const BrownianBatch& paths,
                                          const EvaluationOptions& options) {
  const int P = paths.paths();
  const int chunk = std::max(1, options.chunk);
  const int N = paths.steps();
  ClosedLoopEvaluation out;
  out.energy.samples.reserve(P);
  out.terminal_squared_error.reserve(P);
  for (int first = 0; first < P; first += chunk) {
    const BrownianBatch part = paths.slice(first, std::min(chunk, P - first));
    const HamiltonianRun run = run_hamiltonian(sol.loop, sol.K, part);
    const PathField x = euler_state(sol.dec, sol.spec.x0, run.v, run.z, part);
    const EnergyEstimate e = estimate_energy(sol.dec, run.v, run.z);
    out.energy.samples.insert(out.energy.samples.end(), e.samples.begin(), e.samples.end());
    out.energy.max_form_mismatch = std::max(out.energy.max_form_mismatch, e.max_form_mismatch);
    const std::vector<double> err = terminal_squared_errors(x, sol.spec.target, part);
    out.terminal_squared_error.insert(out.terminal_squared_error.end(), err.begin(), err.end());
    for (int p = 0; p < part.paths(); ++p) {
      for (int k = 0; k <= N; ++k) {
        out.representation_gap = std::max(
            out.representation_gap, (run.X(p, k) - x.at(p, k)).cwiseAbs().maxCoeff());
      }
    }
    if (options.observer) options.observer(run, x, part);
  }
  const MeanStdError e = mean_and_standard_error(out.energy.samples);
  out.energy.mean = e.mean;
  out.energy.standard_error = e.standard_error;
  const MeanStdError t = mean_and_standard_error(out.terminal_squared_error);
  out.terminal_mse = t.mean;
  out.terminal_mse_standard_error = t.standard_error;
  for (double v : out.terminal_squared_error) {
    out.terminal_max_abs = std::max(out.terminal_max_abs, std::sqrt(v));
  }
  return out;
}

}  // namespace stochmin
