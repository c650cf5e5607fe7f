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

#include "stochmin/bsde.hpp"

#include <cmath>

#include "stochmin/errors.hpp"

namespace stochmin {

Matrix resolvent(const NodeBlocks& b, const Matrix& P) {
  return b.Hbar_inv * spd_inverse(symmetrize(b.Hbar_inv + P));
}

void bsde_matrices(const NodeBlocks& b, const Matrix& P, Matrix& B1, Matrix& B2) {
  const Matrix L = resolvent(b, P);
  const Matrix PCtH = P * b.C.transpose() * b.Hbar;
  B2 = (b.Bbar - PCtH) * L;
  B1 = b.Abar + PCtH * b.C + B2 * P * b.Hbar * b.C;
}

BsdeCoefficients bsde_coefficients(const Decomposition& dec, const RiccatiSolution& pbar) {
  const TimeGrid& grid = dec.grid;
  const int N = grid.steps();
  BsdeCoefficients c;
  c.grid = grid;
  c.B1.resize(N + 1);
  c.B2.resize(N + 1);
  c.B1_mid.resize(N);
  c.B2_mid.resize(N);
  c.B1_right.resize(N);
  c.B2_right.resize(N);
  for (int k = 0; k <= N; ++k) {
    const NodeBlocks& b = dec.node[static_cast<std::size_t>(k)];
    bsde_matrices(b, pbar.Pbar[k], c.B1[k], c.B2[k]);
    if (k == N) break;
    bsde_matrices(b, pbar.Pbar_mid[k], c.B1_mid[k], c.B2_mid[k]);
    bsde_matrices(b, pbar.Pbar[k + 1], c.B1_right[k], c.B2_right[k]);
  }
  return c;
}

BsdeSolution solve_pq_affine(const BsdeCoefficients& c, const TerminalTarget& target) {
  const int N = c.grid.steps();
  const double dt = c.grid.dt();
  BsdeSolution sol;
  sol.grid = c.grid;
  sol.alpha.resize(N + 1);
  sol.beta.resize(N + 1);
  sol.alpha[N] = -target.a;
  sol.beta[N] = -target.b;
  struct State {
    Vector alpha, beta;
  };
  const auto f = [](const Matrix& B1, const Matrix& B2, const State& y) {
    return State{B1 * y.alpha + B2 * y.beta, B1 * y.beta};
  };
  const auto axpy = [](const State& y, double h, const State& d) {
    return State{y.alpha + h * d.alpha, y.beta + h * d.beta};
  };
  for (int k = N - 1; k >= 0; --k) {
    const State y{sol.alpha[k + 1], sol.beta[k + 1]};
    const State k1 = f(c.B1_right[k], c.B2_right[k], y);
    const State k2 = f(c.B1_mid[k], c.B2_mid[k], axpy(y, -0.5 * dt, k1));
    const State k3 = f(c.B1_mid[k], c.B2_mid[k], axpy(y, -0.5 * dt, k2));
    const State k4 = f(c.B1[k], c.B2[k], axpy(y, -dt, k3));
    sol.alpha[k] = y.alpha - dt / 6.0 * (k1.alpha + 2.0 * k2.alpha + 2.0 * k3.alpha + k4.alpha);
    sol.beta[k] = y.beta - dt / 6.0 * (k1.beta + 2.0 * k2.beta + 2.0 * k3.beta + k4.beta);
    if (!sol.alpha[k].allFinite() || !sol.beta[k].allFinite() ||
        std::max(sol.alpha[k].cwiseAbs().maxCoeff(), sol.beta[k].cwiseAbs().maxCoeff()) > 1e12) {
      throw Error(ErrorCode::kRiccatiBlowup, "BSDE coefficients exceeded the overflow guard");
    }
  }
  return sol;
}

AdjointSample simulate_adjoint(const BsdeCoefficients& c, const BrownianBatch& paths) {
  if (paths.grid() != c.grid) {
    throw Error(ErrorCode::kShapeMismatch, "Brownian batch and coefficients differ in grid");
  }
  const int N = c.grid.steps();
  const double dt = c.grid.dt();
  const Eigen::Index n = c.B1.front().rows();
  AdjointSample out;
  out.seed = paths.seed();
  out.P_T.assign(paths.paths(), Matrix());
  parallel_for(paths.paths(), [&](int p) {
    Matrix P = Matrix::Identity(n, n);
    for (int k = 0; k < N; ++k) {
      P -= P * (c.B1[k] * dt + c.B2[k] * paths.increment(p, k));
    }
    out.P_T[static_cast<std::size_t>(p)] = std::move(P);
  });
  return out;
}

Vector compute_K(const RiccatiSolution& pbar, const BsdeSolution& sol, const Vector& x0) {
  const ControllabilityVerdict verdict = controllability_test(pbar);
  if (!verdict.controllable) {
    throw Error(ErrorCode::kNotControllable,
                "Pbar(0) is not positive definite (margin " +
                    std::to_string(verdict.margin) + ")");
  }
  return spd_solve(pbar.Pbar.front(), -x0 - sol.alpha.front());
}

MartingaleCheck adjoint_cross_check(const RiccatiSolution& pbar, const BsdeSolution& sol,
                                    const AdjointSample& adjoint,
                                    const BrownianBatch& paths,
                                    const TerminalTarget& target, const Vector& x0) {
  const Eigen::Index n = x0.size();
  const int count = paths.paths();
  MartingaleCheck check;
  check.p0 = sol.alpha.front();
  check.mc_mean.resize(n);
  check.mc_standard_error.resize(n);
  std::vector<Vector> products(count);
  for (int p = 0; p < count; ++p) {
    const Vector pT = -target.evaluate(paths.terminal(p));
    products[static_cast<std::size_t>(p)] = adjoint.P_T[static_cast<std::size_t>(p)] * pT;
  }
  std::vector<double> column(count);
  check.pass = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int p = 0; p < count; ++p) column[p] = products[static_cast<std::size_t>(p)](i);
    const MeanStdError s = mean_and_standard_error(column);
    check.mc_mean(i) = s.mean;
    check.mc_standard_error(i) = s.standard_error;
    const double allowance = 3.0 * s.standard_error + 1e-8 * (1.0 + std::abs(check.p0(i)));
    if (!(std::abs(s.mean - check.p0(i)) <= allowance)) check.pass = false;
  }
  check.K = compute_K(pbar, sol, x0);
  check.K_mc = spd_solve(pbar.Pbar.front(), -x0 - check.mc_mean);
  return check;
}

}  // namespace stochmin
