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

#include <functional>

#include "stochmin/brownian.hpp"
#include "stochmin/bsde.hpp"
#include "stochmin/core.hpp"
#include "stochmin/decomposition.hpp"
#include "stochmin/hamiltonian.hpp"
#include "stochmin/oracle.hpp"
#include "stochmin/riccati.hpp"
#include "stochmin/simulate.hpp"

namespace stochmin {

/// Deterministic part of the minimum-energy solution: everything needed to
/// generate the optimal controls on any Brownian path.
struct MinimumEnergySolution {
  ProblemSpec spec;
  Decomposition dec;
  RiccatiSolution pbar;
  ControllabilityVerdict verdict;
  BsdeCoefficients bsde;
  BsdeSolution pq;
  Vector K;
  ClosedLoopCoefficients loop;

  /// Controls at t = 0, where Y = K and W = 0.
  SolverSummary root_controls(double J) const;
};

/// validate -> decompose -> schur_check -> Pbar -> controllability -> (p, q)
/// -> K -> closed loop. Throws VALIDATION_FAILED, RANK_DEFICIENT_D,
/// NOT_CONTROLLABLE or a Riccati error.
MinimumEnergySolution solve_minimum_energy(const ProblemSpec& spec);

/// Same pipeline on an explicit factorization M per node.
MinimumEnergySolution solve_minimum_energy(const ProblemSpec& spec,
                                           const std::vector<Matrix>& M);

struct ClosedLoopEvaluation {
  EnergyEstimate energy;
  std::vector<double> terminal_squared_error;
  double terminal_mse = 0.0;
  double terminal_mse_standard_error = 0.0;
  double terminal_max_abs = 0.0;
  /// Largest |X - x| over nodes and paths between the Hamiltonian state and
  /// the Euler state driven by (v*, z*).
  double representation_gap = 0.0;
};

struct EvaluationOptions {
  /// Paths simulated at a time; results do not depend on it.
  int chunk = 1000;
  /// Called once per chunk with the Hamiltonian run, the Euler state and
  /// the chunk's Brownian slice.
  std::function<void(const HamiltonianRun&, const PathField&, const BrownianBatch&)>
      observer;
};

ClosedLoopEvaluation evaluate_closed_loop(const MinimumEnergySolution& sol,
                                          const BrownianBatch& paths,
                                          const EvaluationOptions& options = {});

}  // namespace stochmin
