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
#include "stochmin/linalg.hpp"

namespace stochmin {

/// Block data of the reformulated problem at one grid node. With
/// u = M [z; v], B M = [G F] and M' R M = [[H1, H2], [H2', H3]].
struct NodeBlocks {
  // Original coefficients.
  Matrix A, B, C, D, R;
  Matrix M;
  Matrix G, F;
  Matrix H1, H2, H3, H3_inv;
  Matrix Abar, Bbar, Hbar, Hbar_inv;

  /// Full control weight [[H1, H2], [H2', H3]] in (z, v) coordinates.
  Matrix H() const;
};

struct Decomposition {
  int n = 0;
  int m = 0;
  TimeGrid grid;
  std::vector<NodeBlocks> node;

  int v_dim() const { return m - n; }
};

/// Rank tolerance for D, relative to its largest singular value.
inline constexpr double kRankTolerance = 1e-10;

/// M = [D'(DD')^{-1} | N] with N an orthonormal basis of ker D taken from a
/// Householder QR of D'. Throws RANK_DEFICIENT_D when rank D < n.
Matrix build_M(const Matrix& D);

NodeBlocks decompose_node(const Matrix& A, const Matrix& B, const Matrix& C,
                          const Matrix& D, const Matrix& R, const Matrix& M);

/// Canonical factorization from build_M at every node.
Decomposition decompose(const ProblemSpec& spec);
/// Caller-supplied factorization, one M per grid node.
Decomposition decompose(const ProblemSpec& spec, const std::vector<Matrix>& M);

/// H3 > 0 and H1 - H2 H3^{-1} H2' > 0 at every node.
ValidationReport schur_check(const Decomposition& dec);

}  // namespace stochmin
