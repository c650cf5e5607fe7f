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

#include <string_view>

#include "stochmin/brownian.hpp"
#include "stochmin/core.hpp"
#include "stochmin/pipeline.hpp"
#include "stochmin/riccati.hpp"

namespace stochmin {

struct LqFixedProblem {
  ProblemSpec base;
  /// Symmetric PSD state weight, n x n.
  MatrixPath Q;
};

/// Base problem document plus a required "Q" field.
LqFixedProblem load_lq_problem(std::string_view document);

/// Q symmetric and PSD at every node (eigenvalues >= -1e-10 scale).
ValidationReport validate_lq(const LqFixedProblem& prob);

struct LqTransform {
  LqRiccatiSolution riccati;
  /// A_hat = A - B K, B_hat = B, C_hat = C - D K, D_hat = D,
  /// R_hat = D'PD + R with K the LQ gain, materialized per grid node.
  ProblemSpec transformed;
};

LqTransform lq_transform(const LqFixedProblem& prob);

struct CompletionOfSquaresCheck {
  /// Mean and SE over paths of
  ///   sum [x'Qx + u'Ru] dt - x0'P(0)x0 - sum u_hat' R_hat u_hat dt.
  double mean_difference = 0.0;
  double standard_error = 0.0;
};

struct LqFixedSolution {
  LqRiccatiSolution lq_riccati;
  ProblemSpec transformed;
  MinimumEnergySolution inner;
  ClosedLoopEvaluation evaluation;
  double initial_cost = 0.0;  // x0' P(0) x0
  double inner_cost = 0.0;
  double inner_cost_standard_error = 0.0;
  double total_cost = 0.0;
  /// Largest |x - x_replay| where x_replay is the original system driven by
  /// the recovered u = u_hat - gain x on the same paths.
  double state_replay_gap = 0.0;
  CompletionOfSquaresCheck completion;
};

/// Runs the minimum-energy pipeline on the transformed problem (controllability
/// is re-certified there) and recovers the original control along paths.
LqFixedSolution solve_lq_fixed(const LqFixedProblem& prob,
                               const BrownianBatch& paths,
                               const EvaluationOptions& options = {});

}  // namespace stochmin
