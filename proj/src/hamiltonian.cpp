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

#include "stochmin/hamiltonian.hpp"

#include "stochmin/errors.hpp"

namespace stochmin {

ClosedLoopCoefficients assemble_closed_loop(const Decomposition& dec,
                                            const RiccatiSolution& pbar,
                                            const BsdeSolution& pq) {
  const TimeGrid& grid = dec.grid;
  if (pbar.grid != grid || pq.grid != grid) {
    throw Error(ErrorCode::kShapeMismatch, "closed-loop inputs differ in grid");
  }
  ClosedLoopCoefficients out;
  out.n = dec.n;
  out.m = dec.m;
  out.grid = grid;
  out.node.resize(grid.nodes());
  for (int k = 0; k < grid.nodes(); ++k) {
    const NodeBlocks& b = dec.node[static_cast<std::size_t>(k)];
    const Matrix& P = pbar.Pbar[k];
    ClosedLoopNode& c = out.node[static_cast<std::size_t>(k)];
    const Matrix L = resolvent(b, P);
    const Matrix HC = b.Hbar * b.C;
    const Matrix CtH = b.C.transpose() * b.Hbar;
    c.Pbar = P;
    c.alpha = pq.alpha[k];
    c.beta = pq.beta[k];
    c.Zy = L * (P * HC * P - P * b.Bbar.transpose());
    c.Zp = L * P * HC;
    c.Zq = L;
    c.dY = -b.Abar.transpose() - CtH * b.C * P + CtH * c.Zy;
    c.dP = -CtH * b.C + CtH * c.Zp;
    c.dQ = CtH * c.Zq;
    c.sY = -b.Bbar.transpose() + HC * P - b.Hbar * c.Zy;
    c.sP = HC - b.Hbar * c.Zp;
    c.sQ = -b.Hbar * c.Zq;
    c.C = b.C;
    c.F = b.F;
    c.H2 = b.H2;
    c.H3_inv = b.H3_inv;
    c.M = b.M;
  }
  return out;
}

NodeState reconstruct_node(const ClosedLoopNode& c, const Vector& Y, double w) {
  NodeState s;
  const Vector p = c.alpha + c.beta * w;
  s.Xbar = c.Pbar * Y + p;
  s.Zbar = c.Zy * Y + c.Zp * p + c.Zq * c.beta;
  s.z = c.C * s.Xbar - s.Zbar;
  s.v = c.H3_inv * (c.F.transpose() * Y - c.H2.transpose() * s.z);
  Vector zv(s.z.size() + s.v.size());
  zv << s.z, s.v;
  s.u = c.M * zv;
  return s;
}

HamiltonianRun run_hamiltonian(const ClosedLoopCoefficients& coeffs, const Vector& K,
                               const BrownianBatch& paths) {
  if (paths.grid() != coeffs.grid) {
    throw Error(ErrorCode::kShapeMismatch, "Brownian batch and closed loop differ in grid");
  }
  const int n = coeffs.n;
  const int m = coeffs.m;
  const int N = coeffs.grid.steps();
  const int P = paths.paths();
  const double dt = coeffs.grid.dt();
  HamiltonianRun run;
  run.seed = paths.seed();
  run.first_path = paths.first_path();
  run.Y = PathField(P, N + 1, n);
  run.Xbar = PathField(P, N + 1, n);
  run.Zbar = PathField(P, N + 1, n);
  run.v = PathField(P, N + 1, m - n);
  run.z = PathField(P, N + 1, n);
  run.u = PathField(P, N + 1, m);
  parallel_for(P, [&](int p) {
    Vector Y = K;
    double w = 0.0;
    for (int k = 0; k <= N; ++k) {
      const ClosedLoopNode& c = coeffs.node[static_cast<std::size_t>(k)];
      const NodeState s = reconstruct_node(c, Y, w);
      run.Y.at(p, k) = Y;
      run.Xbar.at(p, k) = s.Xbar;
      run.Zbar.at(p, k) = s.Zbar;
      run.v.at(p, k) = s.v;
      run.z.at(p, k) = s.z;
      run.u.at(p, k) = s.u;
      if (k == N) break;
      const double dw = paths.increment(p, k);
      const Vector pk = c.alpha + c.beta * w;
      Y += (c.dY * Y + c.dP * pk + c.dQ * c.beta) * dt +
           (c.sY * Y + c.sP * pk + c.sQ * c.beta) * dw;
      w += dw;
    }
  });
  return run;
}

double expected_optimal_cost(const ClosedLoopCoefficients& coeffs, const Vector& K,
                             const Vector& x0, const TerminalTarget& target) {
  const int N = coeffs.grid.steps();
  const double dt = coeffs.grid.dt();
  // m1 = E[Y], m2 = E[Y W] under the Euler recursion.
  Vector m1 = K;
  Vector m2 = Vector::Zero(K.size());
  for (int k = 0; k < N; ++k) {
    const ClosedLoopNode& c = coeffs.node[static_cast<std::size_t>(k)];
    const double t = coeffs.grid.t(k);
    const Vector next1 = m1 + (c.dY * m1 + c.dP * c.alpha + c.dQ * c.beta) * dt;
    const Vector next2 = m2 + (c.dY * m2 + c.dP * c.beta * t) * dt +
                         (c.sY * m1 + c.sP * c.alpha + c.sQ * c.beta) * dt;
    m1 = next1;
    m2 = next2;
  }
  return target.a.dot(m1) + target.b.dot(m2) - K.dot(x0);
}

}  // namespace stochmin
