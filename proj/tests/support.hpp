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

// Shared fixtures for the unit and acceptance tests.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "stochmin/core.hpp"

namespace stochmin::testing {

inline std::string config_path(const std::string& name) {
  return std::string(STOCHMIN_CONFIG_DIR) + "/" + name;
}

inline Matrix mat(int rows, int cols, std::initializer_list<double> values) {
  Matrix out(rows, cols);
  auto it = values.begin();
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out(i, j) = *it++;
  }
  return out;
}

inline Vector vec(std::initializer_list<double> values) {
  Vector out(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) out(i++) = v;
  return out;
}

/// dx = v dt + z dW, R = I, x0 and the affine target given.
inline ProblemSpec flagship(int steps = 1000, double x0 = 0.0, double a = 0.0,
                            double b = 1.0, double horizon = 1.0) {
  ProblemSpec s;
  s.n = 1;
  s.m = 2;
  s.grid = TimeGrid(horizon, steps);
  s.A = MatrixPath(Matrix::Zero(1, 1));
  s.B = MatrixPath(mat(1, 2, {0.0, 1.0}));
  s.C = MatrixPath(Matrix::Zero(1, 1));
  s.D = MatrixPath(mat(1, 2, {1.0, 0.0}));
  s.R = MatrixPath(Matrix::Identity(2, 2));
  s.x0 = vec({x0});
  s.target = {vec({a}), vec({b})};
  return s;
}

/// Seeded random instance: n in {1, 2}, m <= 3, A and C switch at T/2,
/// affine target. Coefficients are of moderate size relative to 1/T.
/// Controllability is not guaranteed.
inline ProblemSpec random_instance(std::uint64_t seed, int steps = 1000) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const auto draw = [&](int r, int c, double scale) {
    Matrix out(r, c);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) out(i, j) = scale * normal(rng);
    }
    return out;
  };
  ProblemSpec s;
  s.n = std::uniform_int_distribution<int>(1, 2)(rng);
  s.m = s.n == 1 ? std::uniform_int_distribution<int>(2, 3)(rng) : 3;
  const int n = s.n;
  const int m = s.m;
  s.grid = TimeGrid(1.0, steps);
  const double mid = s.grid.t(steps / 2);
  s.A = MatrixPath({mid}, {draw(n, n, 0.25), draw(n, n, 0.25)});
  s.C = MatrixPath({mid}, {draw(n, n, 0.25), draw(n, n, 0.25)});
  s.B = MatrixPath(draw(n, m, 1.0));
  Matrix D = draw(n, m, 0.2);
  D.leftCols(n) += Matrix::Identity(n, n);
  s.D = MatrixPath(D);
  const Matrix L = draw(m, m, 0.45);
  s.R = MatrixPath(Matrix(Matrix::Identity(m, m) + L * L.transpose()));
  s.x0 = draw(n, 1, 1.0).col(0);
  s.target = {draw(n, 1, 1.0).col(0), draw(n, 1, 0.3).col(0)};
  return s;
}

/// Smallest eigenvalue of Pbar(0) relative to its mean eigenvalue below
/// which an instance counts as nearly uncontrollable.
inline constexpr double kWellConditionedMargin = 0.1;

}  // namespace stochmin::testing
