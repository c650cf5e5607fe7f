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

#include "stochmin/riccati.hpp"

#include <cmath>
#include <sstream>

#include "stochmin/errors.hpp"

namespace stochmin {

namespace {

constexpr double kOverflowGuard = 1e12;
constexpr double kSymmetryLimit = 1e-6;

void guard(const Matrix& P, int node, const char* what) {
  if (!P.allFinite() || P.cwiseAbs().maxCoeff() > kOverflowGuard) {
    std::ostringstream msg;
    msg << what << " exceeded the overflow guard at node " << node;
    throw Error(ErrorCode::kRiccatiBlowup, msg.str());
  }
}

double relative_asymmetry(const Matrix& P) {
  return asymmetry(P) / std::max(1.0, P.cwiseAbs().maxCoeff());
}

/// One backward RK4 step of size dt from `end`, with the right-hand side
/// frozen at one set of coefficients.
template <typename Rhs>
Matrix rk4_backward(const Rhs& f, const Matrix& end, double dt) {
  const Matrix k1 = f(end);
  const Matrix k2 = f(end - 0.5 * dt * k1);
  const Matrix k3 = f(end - 0.5 * dt * k2);
  const Matrix k4 = f(end - dt * k3);
  return end - dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Matrix pbar_rhs(const NodeBlocks& b, const Matrix& P) {
  const Matrix V = P * b.C.transpose() - b.Bbar * b.Hbar_inv;
  const Matrix S = symmetrize(b.Hbar_inv + P);
  Matrix out = b.A * P + P * b.A.transpose() - b.F * b.H3_inv * b.F.transpose() -
               b.Bbar * b.Hbar_inv * b.Bbar.transpose() +
               V * spd_solve(S, V.transpose());
  return out;
}

RiccatiSolution solve_pbar(const Decomposition& dec) {
  const TimeGrid& grid = dec.grid;
  const int N = grid.steps();
  const double dt = grid.dt();
  RiccatiSolution sol;
  sol.grid = grid;
  sol.Pbar.assign(grid.nodes(), Matrix::Zero(dec.n, dec.n));
  sol.Pbar_mid.assign(N, Matrix::Zero(dec.n, dec.n));
  sol.min_eig.assign(grid.nodes(), 0.0);
  for (int k = N - 1; k >= 0; --k) {
    const NodeBlocks& b = dec.node[static_cast<std::size_t>(k)];
    const auto f = [&b](const Matrix& P) { return pbar_rhs(b, P); };
    const Matrix& next = sol.Pbar[static_cast<std::size_t>(k + 1)];
    Matrix P = rk4_backward(f, next, dt);
    guard(P, k, "Pbar");
    sol.symmetric_residual = std::max(sol.symmetric_residual, relative_asymmetry(P));
    if (sol.symmetric_residual > kSymmetryLimit) {
      std::ostringstream msg;
      msg << "Pbar asymmetry " << sol.symmetric_residual << " at node " << k;
      throw Error(ErrorCode::kNonsymmetric, msg.str());
    }
    P = symmetrize(P);
    sol.Pbar_mid[static_cast<std::size_t>(k)] =
        symmetrize(0.5 * (P + next) + dt / 8.0 * (f(P) - f(next)));
    sol.Pbar[static_cast<std::size_t>(k)] = std::move(P);
  }
  double scale = 0.0;
  for (int k = 0; k <= N; ++k) {
    const Matrix& P = sol.Pbar[static_cast<std::size_t>(k)];
    sol.min_eig[static_cast<std::size_t>(k)] = min_eigenvalue(P);
    scale = std::max(scale, spectral_radius_sym(P));
  }
  sol.min_eig_at_0 = sol.min_eig.front();
  for (double e : sol.min_eig) {
    if (e < -1e-9 * std::max(1.0, scale)) sol.psd = false;
  }
  return sol;
}

ControllabilityVerdict controllability_test(const RiccatiSolution& sol) {
  const Matrix& P0 = sol.Pbar.front();
  ControllabilityVerdict v;
  v.margin = min_eigenvalue(P0);
  const double mean_eig = P0.trace() / static_cast<double>(P0.rows());
  v.controllable = mean_eig > 0.0 && v.margin > kControllabilityTolerance * mean_eig;
  return v;
}

namespace {

Matrix lq_weight(const Matrix& D, const Matrix& R, const Matrix& P) {
  return symmetrize(D.transpose() * P * D + R);
}

void check_weight(const Matrix& W, const Matrix& R, int node) {
  const double scale = std::max(1e-300, spectral_radius_sym(R));
  if (!(min_eigenvalue(W) > kPositivityTolerance * scale)) {
    std::ostringstream msg;
    msg << "D'PD + R lost positivity at node " << node;
    throw Error(ErrorCode::kGainSingular, msg.str());
  }
}

}  // namespace

Matrix lq_riccati_rhs(const Matrix& A, const Matrix& B, const Matrix& C,
                      const Matrix& D, const Matrix& R, const Matrix& Q,
                      const Matrix& P) {
  const Matrix S = B.transpose() * P + D.transpose() * P * C;
  const Matrix W = lq_weight(D, R, P);
  return -(P * A + A.transpose() * P + C.transpose() * P * C + Q) +
         S.transpose() * spd_solve(W, S);
}

LqRiccatiSolution solve_lq_riccati(const ProblemSpec& spec, const MatrixPath& Q) {
  const TimeGrid& grid = spec.grid;
  const int N = grid.steps();
  const double dt = grid.dt();
  LqRiccatiSolution sol;
  sol.grid = grid;
  sol.P.assign(grid.nodes(), Matrix::Zero(spec.n, spec.n));
  sol.gain.resize(grid.nodes());
  sol.min_weight_eig = std::numeric_limits<double>::infinity();
  const auto gain_at = [&](int k) {
    const double t = grid.t(k);
    const Matrix& P = sol.P[static_cast<std::size_t>(k)];
    const Matrix& D = spec.D.at(t);
    const Matrix& R = spec.R.at(t);
    const Matrix W = lq_weight(D, R, P);
    check_weight(W, R, k);
    sol.min_weight_eig = std::min(sol.min_weight_eig, min_eigenvalue(W));
    sol.gain[static_cast<std::size_t>(k)] =
        spd_solve(W, spec.B.at(t).transpose() * P + D.transpose() * P * spec.C.at(t));
  };
  gain_at(N);
  for (int k = N - 1; k >= 0; --k) {
    const double t = grid.t(k);
    const Matrix &A = spec.A.at(t), &B = spec.B.at(t), &C = spec.C.at(t),
                 &D = spec.D.at(t), &R = spec.R.at(t), &Qk = Q.at(t);
    const auto f = [&](const Matrix& P) {
      check_weight(lq_weight(D, R, P), R, k);
      return lq_riccati_rhs(A, B, C, D, R, Qk, P);
    };
    Matrix P = rk4_backward(f, sol.P[static_cast<std::size_t>(k + 1)], dt);
    guard(P, k, "P");
    if (relative_asymmetry(P) > kSymmetryLimit) {
      throw Error(ErrorCode::kNonsymmetric, "LQ Riccati solution lost symmetry");
    }
    sol.P[static_cast<std::size_t>(k)] = symmetrize(P);
    gain_at(k);
  }
  return sol;
}

}  // namespace stochmin
