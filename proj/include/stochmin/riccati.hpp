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

#include <vector>

#include "stochmin/core.hpp"
#include "stochmin/decomposition.hpp"

namespace stochmin {

struct RiccatiSolution {
  TimeGrid grid;
  /// Pbar(t_k), k = 0..N.
  std::vector<Matrix> Pbar;
  /// Pbar at step midpoints t_k + dt/2 (cubic Hermite dense output).
  std::vector<Matrix> Pbar_mid;
  std::vector<double> min_eig;
  double min_eig_at_0 = 0.0;
  /// Largest relative asymmetry seen before per-step symmetrization.
  double symmetric_residual = 0.0;
  bool psd = true;
};

/// Time derivative of Pbar given Pbar at a node with that node's blocks.
Matrix pbar_rhs(const NodeBlocks& blocks, const Matrix& Pbar);

/// Integrates the Hamiltonian Riccati equation backward from Pbar(T) = 0
/// with classical RK4, symmetrizing after each step.
RiccatiSolution solve_pbar(const Decomposition& dec);

struct ControllabilityVerdict {
  bool controllable = false;
  /// Smallest eigenvalue of Pbar(0).
  double margin = 0.0;
};

inline constexpr double kControllabilityTolerance = 1e-8;

/// Pbar(0) > 0, judged relative to trace(Pbar(0)) / n.
ControllabilityVerdict controllability_test(const RiccatiSolution& sol);

struct LqRiccatiSolution {
  TimeGrid grid;
  std::vector<Matrix> P;
  /// (D'PD + R)^{-1} (B'P + D'PC), m x n.
  std::vector<Matrix> gain;
  /// Smallest eigenvalue of D'PD + R seen at any node.
  double min_weight_eig = 0.0;
};

Matrix lq_riccati_rhs(const Matrix& A, const Matrix& B, const Matrix& C,
                      const Matrix& D, const Matrix& R, const Matrix& Q,
                      const Matrix& P);

/// Backward RK4 for the state-penalized LQ Riccati equation, P(T) = 0.
LqRiccatiSolution solve_lq_riccati(const ProblemSpec& spec, const MatrixPath& Q);

}  // namespace stochmin
