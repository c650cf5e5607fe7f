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

#include "stochmin/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "stochmin/errors.hpp"

namespace stochmin {

using nlohmann::json;

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorCode::kInvalidArgument, "horizon T must be positive");
  }
  if (steps <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "steps must be positive");
  }
}

MatrixPath::MatrixPath(Matrix constant) : values_{std::move(constant)} {}

MatrixPath::MatrixPath(std::vector<double> breakpoints, std::vector<Matrix> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (values_.empty() || values_.size() != breakpoints_.size() + 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "a matrix path needs one more value than breakpoints");
  }
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (values_[i].rows() != values_[0].rows() ||
        values_[i].cols() != values_[0].cols()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "matrix path segments differ in shape");
    }
  }
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] > breakpoints_[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "matrix path breakpoints must be strictly increasing");
    }
  }
}

MatrixPath MatrixPath::from_nodes(const TimeGrid& grid,
                                  const std::vector<Matrix>& node_values) {
  if (static_cast<int>(node_values.size()) != grid.nodes()) {
    throw Error(ErrorCode::kShapeMismatch, "one value per grid node expected");
  }
  std::vector<double> breakpoints;
  std::vector<Matrix> values{node_values.front()};
  for (int k = 1; k < grid.nodes(); ++k) {
    if (node_values[k] != values.back()) {
      breakpoints.push_back(grid.t(k));
      values.push_back(node_values[k]);
    }
  }
  return MatrixPath(std::move(breakpoints), std::move(values));
}

const Matrix& MatrixPath::at(double t) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(t));
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t + tol);
  return values_[static_cast<std::size_t>(it - breakpoints_.begin())];
}

std::vector<Matrix> MatrixPath::on_grid(const TimeGrid& grid) const {
  std::vector<Matrix> out;
  out.reserve(grid.nodes());
  for (int k = 0; k < grid.nodes(); ++k) out.push_back(at(grid.t(k)));
  return out;
}

bool MatrixPath::operator==(const MatrixPath& other) const {
  if (breakpoints_ != other.breakpoints_ || values_.size() != other.values_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i].rows() != other.values_[i].rows() ||
        values_[i].cols() != other.values_[i].cols() ||
        values_[i] != other.values_[i]) {
      return false;
    }
  }
  return true;
}

ProblemSpec ProblemSpec::with_steps(int steps) const {
  ProblemSpec out = *this;
  out.grid = TimeGrid(grid.horizon(), steps);
  return out;
}

bool ProblemSpec::operator==(const ProblemSpec& other) const {
  return n == other.n && m == other.m && grid == other.grid && A == other.A &&
         B == other.B && C == other.C && D == other.D && R == other.R &&
         x0 == other.x0 && target == other.target;
}

bool ValidationReport::pass() const {
  return std::none_of(findings.begin(), findings.end(), [](const Finding& f) {
    return f.severity == Severity::kError;
  });
}

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(findings.begin(), findings.end(),
                     [&](const Finding& f) { return f.code == code; });
}

void ValidationReport::add(std::string code, std::string message, int node,
                           Severity severity) {
  for (auto it = findings.rbegin(); it != findings.rend(); ++it) {
    if (it->code == code && it->node_end == node - 1 && node >= 0) {
      it->node_end = node;
      return;
    }
  }
  findings.push_back({std::move(code), std::move(message), node, node, severity});
}

namespace {

Matrix parse_matrix(const json& node, const std::string& field) {
  if (node.is_number()) {
    Matrix out(1, 1);
    out(0, 0) = node.get<double>();
    return out;
  }
  if (!node.is_array() || node.empty()) {
    throw Error(ErrorCode::kParseError, "field '" + field + "' is not a matrix literal");
  }
  if (node.front().is_number()) {
    Matrix out(1, static_cast<Eigen::Index>(node.size()));
    for (std::size_t j = 0; j < node.size(); ++j) {
      if (!node[j].is_number()) {
        throw Error(ErrorCode::kParseError, "field '" + field + "' has a non-numeric entry");
      }
      out(0, static_cast<Eigen::Index>(j)) = node[j].get<double>();
    }
    return out;
  }
  const std::size_t rows = node.size();
  const std::size_t cols = node.front().is_array() ? node.front().size() : 0;
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const json& row = node[i];
    if (!row.is_array() || row.size() != cols) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "field '" + field + "' has ragged rows");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!row[j].is_number()) {
        throw Error(ErrorCode::kParseError, "field '" + field + "' has a non-numeric entry");
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j].get<double>();
    }
  }
  return out;
}

void check_shape(const Matrix& value, const std::string& field, int rows, int cols) {
  if (value.rows() != rows || value.cols() != cols) {
    std::ostringstream msg;
    msg << "field '" << field << "': expected " << rows << "x" << cols << ", got "
        << value.rows() << "x" << value.cols();
    throw Error(ErrorCode::kDimensionMismatch, msg.str());
  }
}

Vector parse_vector(const json& node, const std::string& field, int size) {
  Matrix raw = parse_matrix(node, field);
  if (raw.rows() == 1) raw.transposeInPlace();
  if (raw.cols() != 1 || raw.rows() != size) {
    std::ostringstream msg;
    msg << "field '" << field << "': expected a vector of length " << size;
    throw Error(ErrorCode::kDimensionMismatch, msg.str());
  }
  return raw.col(0);
}

const json& require(const json& doc, const char* field) {
  const auto it = doc.find(field);
  if (it == doc.end()) {
    throw Error(ErrorCode::kMissingField, std::string("missing field '") + field + "'");
  }
  return *it;
}

json matrix_to_json(const Matrix& x) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < x.cols(); ++j) row.push_back(x(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& x) {
  json out = json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) out.push_back(x(i));
  return out;
}

int require_int(const json& doc, const char* field) {
  const json& v = require(doc, field);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::kParseError, std::string("field '") + field + "' must be an integer");
  }
  return v.get<int>();
}

}  // namespace

MatrixPath parse_matrix_path(const json& node, const std::string& field,
                             const TimeGrid& grid, int rows, int cols) {
  if (!node.is_object()) {
    Matrix value = parse_matrix(node, field);
    check_shape(value, field, rows, cols);
    return MatrixPath(std::move(value));
  }
  const auto bp_it = node.find("breakpoints");
  const auto val_it = node.find("values");
  if (bp_it == node.end() || val_it == node.end()) {
    throw Error(ErrorCode::kMissingField,
                "field '" + field + "' needs 'breakpoints' and 'values'");
  }
  if (!bp_it->is_array() || !val_it->is_array()) {
    throw Error(ErrorCode::kParseError, "field '" + field + "' segments must be lists");
  }
  std::vector<double> breakpoints;
  int previous = 0;
  for (const json& b : *bp_it) {
    if (!b.is_number()) {
      throw Error(ErrorCode::kParseError, "field '" + field + "' has a non-numeric breakpoint");
    }
    const long k = std::lround(b.get<double>() / grid.dt());
    if (k <= previous || k >= grid.steps()) {
      throw Error(ErrorCode::kInvalidField,
                  "field '" + field +
                      "': breakpoints must snap to distinct interior grid nodes");
    }
    previous = static_cast<int>(k);
    breakpoints.push_back(grid.t(previous));
  }
  std::vector<Matrix> values;
  for (const json& v : *val_it) {
    Matrix value = parse_matrix(v, field);
    check_shape(value, field, rows, cols);
    values.push_back(std::move(value));
  }
  if (values.size() != breakpoints.size() + 1) {
    throw Error(ErrorCode::kDimensionMismatch,
                "field '" + field + "': expected one more value than breakpoints");
  }
  return MatrixPath(std::move(breakpoints), std::move(values));
}

json matrix_path_to_json(const MatrixPath& path) {
  if (path.is_constant()) return matrix_to_json(path.values().front());
  json values = json::array();
  for (const Matrix& v : path.values()) values.push_back(matrix_to_json(v));
  return json{{"breakpoints", path.breakpoints()}, {"values", std::move(values)}};
}

ProblemSpec load_problem(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::kParseError, "problem document must be a JSON object");
  }
  ProblemSpec spec;
  spec.n = require_int(doc, "n");
  spec.m = require_int(doc, "m");
  if (spec.n <= 0 || spec.m <= 0) {
    throw Error(ErrorCode::kInvalidField, "n and m must be positive");
  }
  const json& horizon = require(doc, "T");
  if (!horizon.is_number()) throw Error(ErrorCode::kParseError, "field 'T' must be a number");
  const double T = horizon.get<double>();
  const int steps = require_int(doc, "steps");
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw Error(ErrorCode::kInvalidField, "field 'T' must be positive");
  }
  if (steps <= 0) throw Error(ErrorCode::kInvalidField, "field 'steps' must be positive");
  spec.grid = TimeGrid(T, steps);
  const int n = spec.n;
  const int m = spec.m;
  spec.A = parse_matrix_path(require(doc, "A"), "A", spec.grid, n, n);
  spec.B = parse_matrix_path(require(doc, "B"), "B", spec.grid, n, m);
  spec.C = parse_matrix_path(require(doc, "C"), "C", spec.grid, n, n);
  spec.D = parse_matrix_path(require(doc, "D"), "D", spec.grid, n, m);
  spec.R = parse_matrix_path(require(doc, "R"), "R", spec.grid, m, m);
  spec.x0 = parse_vector(require(doc, "x0"), "x0", n);
  const json& target = require(doc, "target");
  if (!target.is_object()) throw Error(ErrorCode::kParseError, "field 'target' must be an object");
  spec.target.a = parse_vector(require(target, "a"), "target.a", n);
  const auto b = target.find("b");
  spec.target.b = b == target.end() ? Vector::Zero(n) : parse_vector(*b, "target.b", n);
  return spec;
}

ProblemSpec load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_problem(buffer.str());
}

json problem_to_json(const ProblemSpec& spec) {
  return json{{"n", spec.n},
              {"m", spec.m},
              {"T", spec.grid.horizon()},
              {"steps", spec.grid.steps()},
              {"x0", vector_to_json(spec.x0)},
              {"A", matrix_path_to_json(spec.A)},
              {"B", matrix_path_to_json(spec.B)},
              {"C", matrix_path_to_json(spec.C)},
              {"D", matrix_path_to_json(spec.D)},
              {"R", matrix_path_to_json(spec.R)},
              {"target", {{"a", vector_to_json(spec.target.a)},
                          {"b", vector_to_json(spec.target.b)}}}};
}

std::string dump_problem(const ProblemSpec& spec) {
  return problem_to_json(spec).dump(2);
}

ValidationReport validate(const ProblemSpec& spec) {
  ValidationReport report;
  if (spec.m < spec.n) {
    report.add("M_LESS_THAN_N",
               "fewer controls than states; no invertible M with D M = [I, 0]", -1);
  }
  if (!spec.x0.allFinite() || !spec.target.a.allFinite() || !spec.target.b.allFinite()) {
    report.add("NON_FINITE", "x0 or target has non-finite entries", -1);
  }
  for (int k = 0; k < spec.grid.nodes(); ++k) {
    const double t = spec.grid.t(k);
    const Matrix* coeffs[] = {&spec.A.at(t), &spec.B.at(t), &spec.C.at(t),
                              &spec.D.at(t), &spec.R.at(t)};
    bool finite = true;
    for (const Matrix* c : coeffs) finite = finite && c->allFinite();
    if (!finite) {
      report.add("NON_FINITE", "coefficient with non-finite entries", k);
      continue;
    }
    const Matrix& R = spec.R.at(t);
    const double scale = std::max(1.0, R.cwiseAbs().maxCoeff());
    if (asymmetry(R) > 1e-12 * scale) {
      report.add("R_NOT_SYMMETRIC", "R is not symmetric", k);
    }
    const Vector eig = symmetric_eigenvalues(R);
    const double largest = eig.cwiseAbs().maxCoeff();
    if (!(eig.minCoeff() > kPositivityTolerance * largest) || largest == 0.0) {
      std::ostringstream msg;
      msg << "R is not positive definite (min eigenvalue " << eig.minCoeff() << ")";
      report.add("R_NOT_POSITIVE", msg.str(), k);
    }
  }
  return report;
}

}  // namespace stochmin
