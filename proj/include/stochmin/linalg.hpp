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

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace stochmin {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix symmetrize(const Matrix& x) { return 0.5 * (x + x.transpose()); }

/// Largest |x_ij - x_ji|; zero for empty matrices.
double asymmetry(const Matrix& x);

/// Eigenvalues of the symmetric part, ascending.
Vector symmetric_eigenvalues(const Matrix& x);

/// Smallest eigenvalue of the symmetric part; +inf for a 0x0 matrix.
double min_eigenvalue(const Matrix& x);

/// Largest |eigenvalue| of the symmetric part; 0 for a 0x0 matrix.
double spectral_radius_sym(const Matrix& x);

bool all_finite(const Matrix& x);

/// Inverse of a symmetric positive definite matrix via Cholesky. Falls back
/// to a pivoted LDL' factorization when Cholesky breaks down on roundoff.
Matrix spd_inverse(const Matrix& x);

/// Solves x * result = rhs for symmetric positive definite x (Cholesky).
Matrix spd_solve(const Matrix& x, const Matrix& rhs);

/// Pairwise (cascade) summation; the result depends only on the order of
/// the input, never on how the input was produced.
double pairwise_sum(std::span<const double> values);

struct MeanStdError {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Sample mean and standard error of the mean (unbiased variance).
MeanStdError mean_and_standard_error(std::span<const double> samples);

}  // namespace stochmin
