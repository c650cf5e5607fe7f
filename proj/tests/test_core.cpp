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

#include <gtest/gtest.h>

#include <string>

#include "stochmin/core.hpp"
#include "stochmin/errors.hpp"
#include "support.hpp"

namespace stochmin {
namespace {

using testing::config_path;
using testing::mat;

constexpr const char* kFlagshipDoc = R"({
  "n": 1, "m": 2, "T": 1.0, "steps": 1000, "x0": [0.0],
  "A": 0.0, "B": [0.0, 1.0], "C": 0.0, "D": [1.0, 0.0],
  "R": [[1.0, 0.0], [0.0, 1.0]], "target": {"a": [0.0], "b": [1.0]}
})";

ErrorCode load_error(const std::string& doc) {
  try {
    load_problem(doc);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "document loaded";
  return ErrorCode::kInvalidArgument;
}

std::string with(std::string doc, const std::string& from, const std::string& to) {
  doc.replace(doc.find(from), from.size(), to);
  return doc;
}

TEST(TimeGrid, NodesAndSpacing) {
  const TimeGrid g(2.0, 8);
  EXPECT_EQ(g.nodes(), 9);
  EXPECT_DOUBLE_EQ(g.dt(), 0.25);
  EXPECT_DOUBLE_EQ(g.t(3), 0.75);
  EXPECT_EQ(g.t(8), 2.0);
}

TEST(TimeGrid, RejectsBadArguments) {
  EXPECT_THROW(TimeGrid(0.0, 4), Error);
  EXPECT_THROW(TimeGrid(1.0, 0), Error);
}

TEST(MatrixPath, PiecewiseLookupIsLeftContinuousAtNodes) {
  const MatrixPath p({0.5}, {mat(1, 1, {1.0}), mat(1, 1, {2.0})});
  EXPECT_EQ(p.at(0.0)(0, 0), 1.0);
  EXPECT_EQ(p.at(0.499)(0, 0), 1.0);
  EXPECT_EQ(p.at(0.5)(0, 0), 2.0);
  EXPECT_EQ(p.at(1.0)(0, 0), 2.0);
  const auto nodes = p.on_grid(TimeGrid(1.0, 4));
  ASSERT_EQ(nodes.size(), 5u);
  EXPECT_EQ(nodes[1](0, 0), 1.0);
  EXPECT_EQ(nodes[2](0, 0), 2.0);
}

TEST(MatrixPath, FromNodesCompressesRuns) {
  const TimeGrid g(1.0, 4);
  const std::vector<Matrix> values = {mat(1, 1, {1}), mat(1, 1, {1}), mat(1, 1, {3}),
                                      mat(1, 1, {3}), mat(1, 1, {3})};
  const MatrixPath p = MatrixPath::from_nodes(g, values);
  EXPECT_EQ(p.values().size(), 2u);
  EXPECT_EQ(p.on_grid(g), values);
}

TEST(LoadProblem, FlagshipTranscription) {
  const ProblemSpec s = load_problem(kFlagshipDoc);
  EXPECT_EQ(s.n, 1);
  EXPECT_EQ(s.m, 2);
  EXPECT_EQ(s.grid, TimeGrid(1.0, 1000));
  EXPECT_EQ(s.B.at(0.3), mat(1, 2, {0.0, 1.0}));
  EXPECT_EQ(s.D.at(0.7), mat(1, 2, {1.0, 0.0}));
  EXPECT_EQ(s.R.at(1.0), Matrix(Matrix::Identity(2, 2)));
  EXPECT_EQ(s.target.b(0), 1.0);
  EXPECT_EQ(s, testing::flagship());
}

TEST(LoadProblem, ShapeErrorsNameTheField) {
  const std::string doc = with(kFlagshipDoc, R"("B": [0.0, 1.0])", R"("B": [1.0])");
  try {
    load_problem(doc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
    EXPECT_NE(std::string(e.what()).find("B"), std::string::npos);
  }
}

TEST(LoadProblem, ParseAndMissingFieldErrors) {
  EXPECT_EQ(load_error("{ not json"), ErrorCode::kParseError);
  EXPECT_EQ(load_error(with(kFlagshipDoc, R"("x0": [0.0],)", "")), ErrorCode::kMissingField);
  EXPECT_EQ(load_error(with(kFlagshipDoc, R"("steps": 1000)", R"("steps": -3)")),
            ErrorCode::kInvalidField);
}

TEST(LoadProblem, BreakpointsMustBeInterior) {
  const std::string doc = with(kFlagshipDoc, R"("A": 0.0)",
                               R"("A": {"breakpoints": [1.0], "values": [0.0, 1.0]})");
  EXPECT_EQ(load_error(doc), ErrorCode::kInvalidField);
}

TEST(LoadProblem, RoundTripIsLossless) {
  for (const char* name : {"flagship.json", "switching.json", "partial.json"}) {
    const ProblemSpec s = load_problem_file(config_path(name));
    EXPECT_EQ(load_problem(dump_problem(s)), s) << name;
  }
  const ProblemSpec r = testing::random_instance(5, 40);
  EXPECT_EQ(load_problem(dump_problem(r)), r);
}

TEST(Validate, FlagshipPasses) {
  EXPECT_TRUE(validate(testing::flagship()).pass());
}

TEST(Validate, IndefiniteWeightLoadsButFails) {
  const ProblemSpec s = load_problem(
      with(kFlagshipDoc, R"([[1.0, 0.0], [0.0, 1.0]])", R"([[1.0, 2.0], [2.0, 1.0]])"));
  const ValidationReport r = validate(s);
  EXPECT_FALSE(r.pass());
  EXPECT_TRUE(r.has("R_NOT_POSITIVE"));
}

TEST(Validate, SquareCasePassesHere) {
  EXPECT_TRUE(validate(load_problem_file(config_path("square.json"))).pass());
}

TEST(Validate, ReportsAsymmetryAndNonFinite) {
  ProblemSpec s = testing::flagship(10);
  s.R = MatrixPath(mat(2, 2, {1.0, 0.5, 0.0, 1.0}));
  EXPECT_TRUE(validate(s).has("R_NOT_SYMMETRIC"));
  s = testing::flagship(10);
  s.x0(0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_TRUE(validate(s).has("NON_FINITE"));
}

TEST(Validate, FewerControlsThanStates) {
  ProblemSpec s = testing::flagship(10);
  s.n = 2;
  s.m = 1;
  s.A = MatrixPath(Matrix::Zero(2, 2));
  s.C = MatrixPath(Matrix::Zero(2, 2));
  s.B = MatrixPath(Matrix::Ones(2, 1));
  s.D = MatrixPath(Matrix::Ones(2, 1));
  s.R = MatrixPath(Matrix::Identity(1, 1));
  s.x0 = Vector::Zero(2);
  s.target = {Vector::Zero(2), Vector::Zero(2)};
  EXPECT_TRUE(validate(s).has("M_LESS_THAN_N"));
}

TEST(Validate, IsPureAndMergesNodeRanges) {
  ProblemSpec s = testing::flagship(10);
  s.R = MatrixPath(mat(2, 2, {1.0, 2.0, 2.0, 1.0}));
  const ValidationReport a = validate(s);
  const ValidationReport b = validate(s);
  ASSERT_EQ(a.findings.size(), b.findings.size());
  for (std::size_t i = 0; i < a.findings.size(); ++i) {
    EXPECT_EQ(a.findings[i].code, b.findings[i].code);
    EXPECT_EQ(a.findings[i].message, b.findings[i].message);
  }
  ASSERT_EQ(a.findings.size(), 1u);
  EXPECT_EQ(a.findings[0].node, 0);
  EXPECT_EQ(a.findings[0].node_end, 10);
}

}  // namespace
}  // namespace stochmin
