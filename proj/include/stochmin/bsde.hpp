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
#include <vector>

#include "stochmin/brownian.hpp"
#include "stochmin/decomposition.hpp"
#include "stochmin/riccati.hpp"

namespace stochmin {

/// Coefficients of the linear BSDE dp = [B1 p + B2 q] dt + q dW. Besides the
/// node values, the backward RK4 in solve_pq_affine needs B1/B2 at step
/// midpoints and at the right end of each step evaluated with that step's
/// (left-endpoint) coefficients.
struct BsdeCoefficients {
  TimeGrid grid;
  std::vector<Matrix> B1, B2;
  std::vector<Matrix> B1_mid, B2_mid;
  std::vector<Matrix> B1_right, B2_right;
};

/// p(t) = alpha(t) + beta(t) W(t), q(t) = beta(t), terminal p(T) = -xi.
struct BsdeSolution {
  TimeGrid grid;
  std::vector<Vector> alpha, beta;

  Vector p(int k, double w) const { return alpha[k] + beta[k] * w; }
  const Vector& q(int k) const { return beta[k]; }
};

struct AdjointSample {
  /// Terminal value of the adjoint process on each path.
  std::vector<Matrix> P_T;
  std::uint64_t seed = 0;
};

/// (I + Pbar Hbar)^{-1}, computed as Hbar^{-1} (Hbar^{-1} + Pbar)^{-1}.
Matrix resolvent(const NodeBlocks& blocks, const Matrix& Pbar);

void bsde_matrices(const NodeBlocks& blocks, const Matrix& Pbar, Matrix& B1,
                   Matrix& B2);

BsdeCoefficients bsde_coefficients(const Decomposition& dec,
                                   const RiccatiSolution& pbar);

/// Backward RK4 for beta' = B1 beta, alpha' = B1 alpha + B2 beta with
/// alpha(T) = -a, beta(T) = -b.
BsdeSolution solve_pq_affine(const BsdeCoefficients& coeffs,
                             const TerminalTarget& target);

/// Euler-Maruyama for dP = -P B1 dt - P B2 dW from P(0) = I.
AdjointSample simulate_adjoint(const BsdeCoefficients& coeffs,
                               const BrownianBatch& paths);

/// K = Pbar(0)^{-1} (-x0 - p(0)). Throws NOT_CONTROLLABLE when Pbar(0) fails
/// the positivity test.
Vector compute_K(const RiccatiSolution& pbar, const BsdeSolution& sol,
                 const Vector& x0);

/// Monte-Carlo cross-check of p(0) = E[P(T) p(T)] and of K through
/// K = Pbar(0)^{-1} (-x0 + E[P(T) xi]).
struct MartingaleCheck {
  Vector p0;
  Vector mc_mean;
  Vector mc_standard_error;
  Vector K;
  Vector K_mc;
  /// |mc_mean - p0| <= 3 SE componentwise.
  bool pass = false;
};

MartingaleCheck adjoint_cross_check(const RiccatiSolution& pbar,
                                    const BsdeSolution& sol,
                                    const AdjointSample& adjoint,
                                    const BrownianBatch& paths,
                                    const TerminalTarget& target,
                                    const Vector& x0);

}  // namespace stochmin
