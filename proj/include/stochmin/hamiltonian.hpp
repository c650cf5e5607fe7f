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
#include "stochmin/bsde.hpp"
#include "stochmin/decomposition.hpp"
#include "stochmin/riccati.hpp"

namespace stochmin {

/// Node-wise affine maps of the decoupled Hamiltonian system. With
/// p = alpha + beta W and q = beta:
///   Zbar = Zy Y + Zp p + Zq q
///   dY   = [dY Y + dP p + dQ q] dt + [sY Y + sP p + sQ q] dW
struct ClosedLoopNode {
  Matrix Pbar;
  Vector alpha, beta;
  Matrix Zy, Zp, Zq;
  Matrix dY, dP, dQ;
  Matrix sY, sP, sQ;
  // Reconstruction of the controls.
  Matrix C, F, H2, H3_inv, M;
};

struct ClosedLoopCoefficients {
  int n = 0;
  int m = 0;
  TimeGrid grid;
  std::vector<ClosedLoopNode> node;
};

ClosedLoopCoefficients assemble_closed_loop(const Decomposition& dec,
                                            const RiccatiSolution& pbar,
                                            const BsdeSolution& pq);

/// Hamiltonian variables and controls at one node for given Y and W(t_k).
struct NodeState {
  Vector Xbar, Zbar, z, v, u;
};

NodeState reconstruct_node(const ClosedLoopNode& node, const Vector& Y, double w);

/// Per-path trajectories of the Hamiltonian system and the optimal controls.
/// X = -Xbar and Z = z are not stored separately.
struct HamiltonianRun {
  std::uint64_t seed = 0;
  int first_path = 0;
  PathField Y, Xbar, Zbar;
  PathField v, z, u;

  Vector X(int p, int k) const { return -Xbar.at(p, k); }
  Vector Z(int p, int k) const { return z.at(p, k); }
};

/// Euler-Maruyama for Y from Y(0) = K; controls at every node from
/// v* = H3^{-1}(F'Y - H2'Z), z* = Z = C Xbar - Zbar, u* = M [z*; v*].
HamiltonianRun run_hamiltonian(const ClosedLoopCoefficients& coeffs,
                               const Vector& K, const BrownianBatch& paths);

/// Optimal cost E[Y(T)' xi] - K' x0 with the moments of Y propagated
/// exactly through the Euler recursion (no sampling noise).
double expected_optimal_cost(const ClosedLoopCoefficients& coeffs,
                             const Vector& K, const Vector& x0,
                             const TerminalTarget& target);

}  // namespace stochmin
