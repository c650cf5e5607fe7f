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
#include "stochmin/core.hpp"
#include "stochmin/decomposition.hpp"

namespace stochmin {

/// Euler-Maruyama for
///   dx = [A x + F v + G z] dt + [C x + z] dW,  x(0) = x0,
/// with controls held at their left-node values over each step.
PathField euler_state(const Decomposition& dec, const Vector& x0,
                      const PathField& v, const PathField& z,
                      const BrownianBatch& paths);

/// Same scheme in the original coordinates: dx = [Ax + Bu]dt + [Cx + Du]dW.
PathField euler_state_u(const Decomposition& dec, const Vector& x0,
                        const PathField& u, const BrownianBatch& paths);

/// |x(T) - xi|^2 per path with xi = a + b W(T).
std::vector<double> terminal_squared_errors(const PathField& x,
                                            const TerminalTarget& target,
                                            const BrownianBatch& paths);

struct EnergyEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::vector<double> samples;
  /// Largest per-path relative gap between the (z, v) form and u'Ru.
  double max_form_mismatch = 0.0;
};

/// Trapezoid-in-time energy per path in the (z, v) form, cross-checked
/// against u'Ru with u = M [z; v].
EnergyEstimate estimate_energy(const Decomposition& dec, const PathField& v,
                               const PathField& z);

/// Tolerance on the per-path agreement of the two cost forms.
inline constexpr double kCostFormTolerance = 1e-10;

struct GramianReport {
  Matrix gramian;
  Vector eigenvalues;
  int rank = 0;
  int paths_used = 0;
  /// Frobenius norm of the entrywise standard errors; bounds the eigenvalue
  /// error through Weyl's inequality.
  double standard_error = 0.0;
};

inline constexpr double kGramianRankTolerance = 1e-6;

/// Monte-Carlo estimate of E int_0^T Phi F E F' Phi' dt with
/// dPhi = -Phi [A - G C] dt - Phi G dW, Phi(0) = I. weight is the
/// (m-n) x (m-n) matrix E per node; empty means identity.
GramianReport gramian_rank_mc(const Decomposition& dec, const BrownianBatch& paths,
                              const std::vector<Matrix>& weight = {});

/// Phi along one path (n x n per node).
std::vector<Matrix> propagator_path(const Decomposition& dec,
                                    const BrownianBatch& paths, int p);

struct ControlPair {
  PathField v;
  PathField z;
};

enum class GammaChoice {
  /// Gamma_2 = [Phi']^{-1} [H1 z1 + H2 v1] with pair 1 taken as optimal.
  kOptimal,
  /// Gamma_2 = c + d W(t) with seeded random vectors c, d.
  kRandom,
};

struct LemmaOptions {
  GammaChoice gamma = GammaChoice::kOptimal;
  std::uint64_t seed = 1;
  /// Gamma(0); empty means zero. The identity holds for any start value.
  Vector gamma0;
  /// Largest accepted mean |x(T) - xi|^2 for either pair.
  double admissibility_tolerance = 1e-2;
};

struct LemmaReport {
  /// E int Phi F (v1 - v2) dt.
  Vector lemma1_mean, lemma1_standard_error;
  bool lemma1_pass = false;
  /// E int Gamma_2' Phi (z2 - z1) dt and -E int Gamma' Phi F (v2 - v1) dt.
  double lemma2_lhs = 0.0;
  double lemma2_rhs = 0.0;
  double lemma2_difference_standard_error = 0.0;
  bool lemma2_pass = false;
  double terminal_mismatch_first = 0.0;
  double terminal_mismatch_second = 0.0;
  double inverse_residual = 0.0;
};

/// Monte-Carlo check of the two orthogonality lemmas for two admissible
/// control pairs on common random numbers. Throws NOT_ADMISSIBLE when
/// either pair misses the target by more than the tolerance.
LemmaReport lemma_identity_checks(const Decomposition& dec, const Vector& x0,
                                  const TerminalTarget& target,
                                  const ControlPair& first,
                                  const ControlPair& second,
                                  const BrownianBatch& paths,
                                  const LemmaOptions& options = {});

}  // namespace stochmin
