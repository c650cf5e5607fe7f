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

#include "stochmin/decomposition.hpp"

#include <sstream>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "stochmin/errors.hpp"

namespace stochmin {

Matrix NodeBlocks::H() const {
  const Eigen::Index n = H1.rows();
  const Eigen::Index k = H3.rows();
  Matrix out(n + k, n + k);
  out << H1, H2, H2.transpose(), H3;
  return out;
}

Matrix build_M(const Matrix& D) {
  const Eigen::Index n = D.rows();
  const Eigen::Index m = D.cols();
  if (n == 0 || m < n) {
    throw Error(ErrorCode::kRankDeficientD, "D must be n x m with m >= n >= 1");
  }
  const Vector sigma = Eigen::JacobiSVD<Matrix>(D).singularValues();
  if (!(sigma(n - 1) > kRankTolerance * sigma(0))) {
    std::ostringstream msg;
    msg << "rank of D below " << n << " (sigma_min " << sigma(n - 1) << ", sigma_max "
        << sigma(0) << ")";
    throw Error(ErrorCode::kRankDeficientD, msg.str());
  }
  Matrix M(m, m);
  const Matrix Dt = D.transpose();
  M.leftCols(n) = Dt * spd_inverse(D * Dt);
  if (m > n) {
    const Matrix Q = Eigen::HouseholderQR<Matrix>(Dt).householderQ();
    M.rightCols(m - n) = Q.rightCols(m - n);
  }
  return M;
}

NodeBlocks decompose_node(const Matrix& A, const Matrix& B, const Matrix& C,
                          const Matrix& D, const Matrix& R, const Matrix& M) {
  const Eigen::Index n = A.rows();
  const Eigen::Index k = M.cols() - n;
  NodeBlocks b;
  b.A = A;
  b.B = B;
  b.C = C;
  b.D = D;
  b.R = R;
  b.M = M;
  const Matrix BM = B * M;
  b.G = BM.leftCols(n);
  b.F = BM.rightCols(k);
  const Matrix H = symmetrize(M.transpose() * R * M);
  b.H1 = H.topLeftCorner(n, n);
  b.H2 = H.topRightCorner(n, k);
  b.H3 = H.bottomRightCorner(k, k);
  b.H3_inv = spd_inverse(b.H3);
  const Matrix H3i_H2t = b.H3_inv * b.H2.transpose();
  b.Abar = A - b.G * C + b.F * H3i_H2t * C;
  b.Bbar = b.G - b.F * H3i_H2t;
  b.Hbar = symmetrize(b.H1 - b.H2 * H3i_H2t);
  b.Hbar_inv = spd_inverse(b.Hbar);
  return b;
}

namespace {

Decomposition decompose_impl(const ProblemSpec& spec, const std::vector<Matrix>* Ms) {
  Decomposition dec;
  dec.n = spec.n;
  dec.m = spec.m;
  dec.grid = spec.grid;
  dec.node.reserve(spec.grid.nodes());
  const Matrix* prev[6] = {nullptr, nullptr, nullptr, nullptr, nullptr, nullptr};
  for (int k = 0; k < spec.grid.nodes(); ++k) {
    const double t = spec.grid.t(k);
    const Matrix* cur[6] = {&spec.A.at(t), &spec.B.at(t), &spec.C.at(t),
                            &spec.D.at(t), &spec.R.at(t),
                            Ms ? &(*Ms)[static_cast<std::size_t>(k)] : nullptr};
    bool same = k > 0;
    for (int i = 0; i < 6 && same; ++i) same = cur[i] == prev[i];
    if (same) {
      dec.node.push_back(dec.node.back());
    } else {
      const Matrix M = Ms ? *cur[5] : build_M(*cur[3]);
      dec.node.push_back(decompose_node(*cur[0], *cur[1], *cur[2], *cur[3], *cur[4], M));
    }
    std::copy(std::begin(cur), std::end(cur), std::begin(prev));
  }
  return dec;
}

}  // namespace

Decomposition decompose(const ProblemSpec& spec) { return decompose_impl(spec, nullptr); }

Decomposition decompose(const ProblemSpec& spec, const std::vector<Matrix>& M) {
  if (static_cast<int>(M.size()) != spec.grid.nodes()) {
    throw Error(ErrorCode::kShapeMismatch, "one factorization per grid node expected");
  }
  Matrix target = Matrix::Zero(spec.n, spec.m);
  target.leftCols(spec.n).setIdentity();
  for (int k = 0; k < spec.grid.nodes(); ++k) {
    const Matrix& Mk = M[static_cast<std::size_t>(k)];
    if (Mk.rows() != spec.m || Mk.cols() != spec.m) {
      throw Error(ErrorCode::kShapeMismatch, "factorization must be m x m");
    }
    const double residual = (spec.D.at(spec.grid.t(k)) * Mk - target).cwiseAbs().maxCoeff();
    const Vector sigma = Eigen::JacobiSVD<Matrix>(Mk).singularValues();
    if (residual > 1e-10 || !(sigma(spec.m - 1) > kRankTolerance * sigma(0))) {
      std::ostringstream msg;
      msg << "factorization at node " << k << " is not invertible with D M = [I, 0]";
      throw Error(ErrorCode::kInvalidArgument, msg.str());
    }
  }
  return decompose_impl(spec, &M);
}

ValidationReport schur_check(const Decomposition& dec) {
  ValidationReport report;
  for (int k = 0; k < static_cast<int>(dec.node.size()); ++k) {
    const NodeBlocks& b = dec.node[static_cast<std::size_t>(k)];
    const double scale = std::max(1e-300, spectral_radius_sym(b.H()));
    if (b.H3.size() > 0 && !(min_eigenvalue(b.H3) > kPositivityTolerance * scale)) {
      report.add("H3_NOT_POSITIVE", "H3 is not positive definite", k);
    }
    const Matrix schur = symmetrize(b.H1 - b.H2 * spd_inverse(b.H3) * b.H2.transpose());
    if (!(min_eigenvalue(schur) > kPositivityTolerance * scale)) {
      report.add("SCHUR_NOT_POSITIVE", "H1 - H2 H3^-1 H2' is not positive definite", k);
    }
  }
  return report;
}

}  // namespace stochmin
