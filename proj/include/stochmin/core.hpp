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

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "stochmin/linalg.hpp"

namespace stochmin {

/// Uniform grid t_k = k T / N on [0, T].
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double horizon, int steps);

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  int nodes() const { return steps_ + 1; }
  double dt() const { return horizon_ / steps_; }
  /// Node time; t(N) is exactly T.
  double t(int k) const {
    return k == steps_ ? horizon_ : static_cast<double>(k) * horizon_ / steps_;
  }

  bool operator==(const TimeGrid&) const = default;

 private:
  double horizon_ = 1.0;
  int steps_ = 1;
};

/// Piecewise-constant matrix-valued function of time. Segment i covers
/// [breakpoint_{i-1}, breakpoint_i) and the last segment is closed at T.
class MatrixPath {
 public:
  MatrixPath() = default;
  explicit MatrixPath(Matrix constant);
  MatrixPath(std::vector<double> breakpoints, std::vector<Matrix> values);

  /// Run-length compresses per-node values into segments with breakpoints
  /// on the grid.
  static MatrixPath from_nodes(const TimeGrid& grid,
                               const std::vector<Matrix>& node_values);

  int rows() const { return static_cast<int>(values_.front().rows()); }
  int cols() const { return static_cast<int>(values_.front().cols()); }
  bool is_constant() const { return values_.size() == 1; }

  const Matrix& at(double t) const;
  std::vector<Matrix> on_grid(const TimeGrid& grid) const;

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<Matrix>& values() const { return values_; }

  bool operator==(const MatrixPath& other) const;

 private:
  std::vector<double> breakpoints_;
  std::vector<Matrix> values_{Matrix::Zero(1, 1)};
};

/// xi = a + b W(T); b = 0 is a deterministic target.
struct TerminalTarget {
  Vector a;
  Vector b;

  Vector evaluate(double terminal_w) const { return a + b * terminal_w; }
  bool deterministic() const { return b.isZero(0.0); }
  bool operator==(const TerminalTarget& other) const {
    return a == other.a && b == other.b;
  }
};

struct ProblemSpec {
  int n = 1;
  int m = 1;
  TimeGrid grid;
  MatrixPath A, B, C, D, R;
  Vector x0;
  TerminalTarget target;

  /// Same coefficients on a grid with a different step count.
  ProblemSpec with_steps(int steps) const;

  bool operator==(const ProblemSpec& other) const;
};

enum class Severity { kWarning, kError };

struct Finding {
  std::string code;
  std::string message;
  int node = -1;
  /// Last node of a run of consecutive nodes with the same finding.
  int node_end = -1;
  Severity severity = Severity::kError;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool pass() const;
  bool has(std::string_view code) const;
  /// Adds a finding, or extends the node range of an earlier finding with
  /// the same code that ends at node - 1.
  void add(std::string code, std::string message, int node,
           Severity severity = Severity::kError);
};

/// Parses a problem document (JSON). Matrix fields accept a number (1x1), a
/// flat list (one row), a list of rows, or an object
/// {"breakpoints": [...], "values": [...]} for piecewise-constant paths.
/// Breakpoints are snapped to the nearest grid node.
ProblemSpec load_problem(std::string_view document);
ProblemSpec load_problem_file(const std::string& path);

/// Serializes to the same document form accepted by load_problem.
std::string dump_problem(const ProblemSpec& spec);
nlohmann::json problem_to_json(const ProblemSpec& spec);

/// Shared helpers for documents that extend the base schema.
MatrixPath parse_matrix_path(const nlohmann::json& node, const std::string& field,
                             const TimeGrid& grid, int rows, int cols);
nlohmann::json matrix_path_to_json(const MatrixPath& path);

ValidationReport validate(const ProblemSpec& spec);

/// Positivity tolerance for R, relative to its largest eigenvalue.
inline constexpr double kPositivityTolerance = 1e-10;

}  // namespace stochmin
