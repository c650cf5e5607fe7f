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

#include "stochmin/simulate.hpp"

#include <cmath>
#include <random>

#include <Eigen/LU>

#include "stochmin/errors.hpp"

namespace stochmin {

namespace {

void require_grid(const Decomposition& dec, const BrownianBatch& paths) {
  if (paths.grid() != dec.grid) {
    throw Error(ErrorCode::kShapeMismatch, "Brownian batch and decomposition differ in grid");
  }
}

void require_field(const PathField& f, const BrownianBatch& paths, int dim,
                   const char* what) {
  if (f.paths() != paths.paths() || f.nodes() != paths.steps() + 1 || f.dim() != dim) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + " is not aligned with the batch");
  }
}

double zv_cost(const NodeBlocks& b, const Vector& z, const Vector& v) {
  return z.dot(b.H1 * z) + 2.0 * v.dot(b.H2.transpose() * z) + v.dot(b.H3 * v);
}

}  // namespace

PathField euler_state(const Decomposition& dec, const Vector& x0, const PathField& v,
                      const PathField& z, const BrownianBatch& paths) {
  require_grid(dec, paths);
  require_field(v, paths, dec.v_dim(), "v");
  require_field(z, paths, dec.n, "z");
  const int N = dec.grid.steps();
  const double dt = dec.grid.dt();
  PathField x(paths.paths(), N + 1, dec.n);
  parallel_for(paths.paths(), [&](int p) {
    Vector xk = x0;
    x.at(p, 0) = xk;
    for (int k = 0; k < N; ++k) {
      const NodeBlocks& b = dec.node[static_cast<std::size_t>(k)];
      const auto vk = v.at(p, k);
      const auto zk = z.at(p, k);
      xk += (b.A * xk + b.F * vk + b.G * zk) * dt + (b.C * xk + zk) * paths.increment(p, k);
      x.at(p, k + 1) = xk;
    }
  });
  return x;
}

PathField euler_state_u(const Decomposition& dec, const Vector& x0, const PathField& u,
                        const BrownianBatch& paths) {
  require_grid(dec, paths);
  require_field(u, paths, dec.m, "u");
  const int N = dec.grid.steps();
  const double dt = dec.grid.dt();
  PathField x(paths.paths(), N + 1, dec.n);
  parallel_for(paths.paths(), [&](int p) {
    Vector xk = x0;
    x.at(p, 0) = xk;
    for (int k = 0; k < N; ++k) {
      const NodeBlocks& b = dec.node[static_cast<std::size_t>(k)];
      const auto uk = u.at(p, k);
      xk += (b.A * xk + b.B * uk) * dt + (b.C * xk + b.D * uk) * paths.increment(p, k);
      x.at(p, k + 1) = xk;
    }
  });
  return x;
}

std::vector<double> terminal_squared_errors(const PathField& x, const TerminalTarget& target,
                                            const BrownianBatch& paths) {
  std::vector<double> out(x.paths());
  const int N = x.nodes() - 1;
  for (int p = 0; p < x.paths(); ++p) {
    out[static_cast<std::size_t>(p)] =
        (x.at(p, N) - target.evaluate(paths.terminal(p))).squaredNorm();
  }
  return out;
}

EnergyEstimate estimate_energy(const Decomposition& dec, const PathField& v,
                               const PathField& z) {
  const int N = dec.grid.steps();
  const double dt = dec.grid.dt();
  if (z.nodes() != N + 1 || v.nodes() != N + 1 || v.paths() != z.paths()) {
    throw Error(ErrorCode::kShapeMismatch, "controls are not aligned with the grid");
  }
  const int P = z.paths();
  EnergyEstimate e;
  e.samples.assign(P, 0.0);
  std::vector<double> mismatch(P, 0.0);
  parallel_for(P, [&](int p) {
    double form_c = 0.0;
    double form_u = 0.0;
    Vector zv(dec.m);
    for (int k = 0; k <= N; ++k) {
      const NodeBlocks& b = dec.node[static_cast<std::size_t>(k)];
      const double weight = (k == 0 || k == N) ? 0.5 * dt : dt;
      zv << z.at(p, k), v.at(p, k);
      const Vector u = b.M * zv;
      form_c += weight * zv_cost(b, z.at(p, k), v.at(p, k));
      form_u += weight * u.dot(b.R * u);
    }
    e.samples[static_cast<std::size_t>(p)] = form_c;
    const double scale = std::max({std::abs(form_c), std::abs(form_u), 1e-300});
    mismatch[static_cast<std::size_t>(p)] = std::abs(form_c - form_u) / scale;
  });
  const MeanStdError s = mean_and_standard_error(e.samples);
  e.mean = s.mean;
  e.standard_error = s.standard_error;
  for (double m : mismatch) e.max_form_mismatch = std::max(e.max_form_mismatch, m);
  return e;
}

std::vector<Matrix> propagator_path(const Decomposition& dec, const BrownianBatch& paths,
                                    int p) {
  require_grid(dec, paths);
  const int N = dec.grid.steps();
  const double dt = dec.grid.dt();
  std::vector<Matrix> phi(N + 1);
  phi[0] = Matrix::Identity(dec.n, dec.n);
  for (int k = 0; k < N; ++k) {
    const NodeBlocks& b = dec.node[static_cast<std::size_t>(k)];
    phi[k + 1] = phi[k] - phi[k] * ((b.A - b.G * b.C) * dt + b.G * paths.increment(p, k));
  }
  return phi;
}

GramianReport gramian_rank_mc(const Decomposition& dec, const BrownianBatch& paths,
                              const std::vector<Matrix>& weight) {
  require_grid(dec, paths);
  const int n = dec.n;
  const int N = dec.grid.steps();
  const double dt = dec.grid.dt();
  const int P = paths.paths();
  if (!weight.empty() && static_cast<int>(weight.size()) != N + 1) {
    throw Error(ErrorCode::kShapeMismatch, "Gramian weight needs one matrix per node");
  }
  // Per-path integrals, stored entrywise for the pairwise reductions.
  std::vector<double> samples(static_cast<std::size_t>(P) * n * n, 0.0);
  parallel_for(P, [&](int p) {
    Matrix phi = Matrix::Identity(n, n);
    Matrix acc = Matrix::Zero(n, n);
    for (int k = 0; k <= N; ++k) {
      const NodeBlocks& b = dec.node[static_cast<std::size_t>(k)];
      const double w = (k == 0 || k == N) ? 0.5 * dt : dt;
      const Matrix PF = phi * b.F;
      if (weight.empty()) {
        acc += w * PF * PF.transpose();
      } else {
        acc += w * PF * weight[static_cast<std::size_t>(k)] * PF.transpose();
      }
      if (k < N) phi -= phi * ((b.A - b.G * b.C) * dt + b.G * paths.increment(p, k));
    }
    std::copy(acc.data(), acc.data() + n * n,
              samples.begin() + static_cast<std::ptrdiff_t>(p) * n * n);
  });
  GramianReport r;
  r.paths_used = P;
  r.gramian = Matrix::Zero(n, n);
  Matrix se = Matrix::Zero(n, n);
  std::vector<double> entry(P);
  for (int i = 0; i < n * n; ++i) {
    for (int p = 0; p < P; ++p) entry[p] = samples[static_cast<std::size_t>(p) * n * n + i];
    const MeanStdError s = mean_and_standard_error(entry);
    r.gramian.data()[i] = s.mean;
    se.data()[i] = s.standard_error;
  }
  r.gramian = symmetrize(r.gramian);
  r.standard_error = se.norm();
  r.eigenvalues = symmetric_eigenvalues(r.gramian);
  const double top = r.eigenvalues.size() ? r.eigenvalues.maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i) {
    if (top > 0.0 && r.eigenvalues(i) > kGramianRankTolerance * top) ++r.rank;
  }
  return r;
}

LemmaReport lemma_identity_checks(const Decomposition& dec, const Vector& x0,
                                  const TerminalTarget& target, const ControlPair& first,
                                  const ControlPair& second, const BrownianBatch& paths,
                                  const LemmaOptions& options) {
  require_grid(dec, paths);
  const int n = dec.n;
  const int N = dec.grid.steps();
  const double dt = dec.grid.dt();
  const int P = paths.paths();
  LemmaReport r;

  const auto mean_error = [&](const ControlPair& pair) {
    const PathField x = euler_state(dec, x0, pair.v, pair.z, paths);
    const std::vector<double> err = terminal_squared_errors(x, target, paths);
    return pairwise_sum(err) / static_cast<double>(P);
  };
  r.terminal_mismatch_first = mean_error(first);
  r.terminal_mismatch_second = mean_error(second);
  if (r.terminal_mismatch_first > options.admissibility_tolerance ||
      r.terminal_mismatch_second > options.admissibility_tolerance) {
    throw Error(ErrorCode::kNotAdmissible,
                "a control pair misses the terminal target beyond tolerance");
  }

  Vector c = Vector::Zero(n);
  Vector d = Vector::Zero(n);
  if (options.gamma == GammaChoice::kRandom) {
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal;
    for (int i = 0; i < n; ++i) c(i) = normal(rng);
    for (int i = 0; i < n; ++i) d(i) = normal(rng);
  }
  const Vector gamma0 = options.gamma0.size() ? options.gamma0 : Vector::Zero(n);

  std::vector<double> l1(static_cast<std::size_t>(P) * n);
  std::vector<double> lhs(P), rhs(P), diff(P), inv_res(P);
  parallel_for(P, [&](int p) {
    Matrix phi = Matrix::Identity(n, n);
    Vector gamma = gamma0;
    Vector s1 = Vector::Zero(n);
    double a = 0.0;
    double b2 = 0.0;
    double worst = 0.0;
    double w = 0.0;
    for (int k = 0; k < N; ++k) {
      const NodeBlocks& b = dec.node[static_cast<std::size_t>(k)];
      const Eigen::PartialPivLU<Matrix> lu(phi);
      const Matrix phi_inv = lu.inverse();
      worst = std::max(worst, (phi * phi_inv - Matrix::Identity(n, n)).cwiseAbs().maxCoeff());
      const Vector dv = second.v.at(p, k) - first.v.at(p, k);
      const Vector dz = second.z.at(p, k) - first.z.at(p, k);
      Vector gamma2;
      if (options.gamma == GammaChoice::kOptimal) {
        const Vector y = b.H1 * first.z.at(p, k) + b.H2 * first.v.at(p, k);
        gamma2 = phi_inv.transpose() * y;
      } else {
        gamma2 = c + d * w;
      }
      s1 -= phi * b.F * dv * dt;
      a += gamma2.dot(phi * dz) * dt;
      b2 -= gamma.dot(phi * b.F * dv) * dt;
      const Vector gamma1 =
          -phi_inv.transpose() * (b.C - b.G).transpose() * phi.transpose() * gamma2;
      const double dw = paths.increment(p, k);
      gamma += gamma1 * dt + gamma2 * dw;
      phi -= phi * ((b.A - b.G * b.C) * dt + b.G * dw);
      w += dw;
    }
    for (int i = 0; i < n; ++i) l1[static_cast<std::size_t>(p) * n + i] = s1(i);
    lhs[p] = a;
    rhs[p] = b2;
    diff[p] = a - b2;
    inv_res[p] = worst;
  });

  // The lemma 1 integrand is Phi F (v1 - v2); s1 accumulated the negative of
  // (v2 - v1).
  r.lemma1_mean.resize(n);
  r.lemma1_standard_error.resize(n);
  r.lemma1_pass = true;
  std::vector<double> column(P);
  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < P; ++p) column[p] = l1[static_cast<std::size_t>(p) * n + i];
    const MeanStdError s = mean_and_standard_error(column);
    r.lemma1_mean(i) = s.mean;
    r.lemma1_standard_error(i) = s.standard_error;
    if (!(std::abs(s.mean) <= 3.0 * std::max(s.standard_error, 1e-12))) r.lemma1_pass = false;
  }
  r.lemma2_lhs = mean_and_standard_error(lhs).mean;
  r.lemma2_rhs = mean_and_standard_error(rhs).mean;
  const MeanStdError sd = mean_and_standard_error(diff);
  r.lemma2_difference_standard_error = sd.standard_error;
  r.lemma2_pass = std::abs(sd.mean) <= 3.0 * std::max(sd.standard_error, 1e-12);
  for (double v : inv_res) r.inverse_residual = std::max(r.inverse_residual, v);
  return r;
}

}  // namespace stochmin
