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

#include "stochmin/linalg.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "stochmin/errors.hpp"

namespace stochmin {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kMissingField: return "MISSING_FIELD";
    case ErrorCode::kDimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::kInvalidField: return "INVALID_FIELD";
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kValidationFailed: return "VALIDATION_FAILED";
    case ErrorCode::kRankDeficientD: return "RANK_DEFICIENT_D";
    case ErrorCode::kRiccatiBlowup: return "RICCATI_BLOWUP";
    case ErrorCode::kNonsymmetric: return "NONSYMMETRIC";
    case ErrorCode::kGainSingular: return "GAIN_SINGULAR";
    case ErrorCode::kNotControllable: return "NOT_CONTROLLABLE";
    case ErrorCode::kInfeasible: return "INFEASIBLE";
    case ErrorCode::kSingularKkt: return "SINGULAR_KKT";
    case ErrorCode::kNotAdmissible: return "NOT_ADMISSIBLE";
    case ErrorCode::kShapeMismatch: return "SHAPE_MISMATCH";
  }
  return "UNKNOWN";
}

double asymmetry(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  return (x - x.transpose()).cwiseAbs().maxCoeff();
}

Vector symmetric_eigenvalues(const Matrix& x) {
  if (x.size() == 0) return Vector();
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(x), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_eigenvalue(const Matrix& x) {
  if (x.size() == 0) return std::numeric_limits<double>::infinity();
  return symmetric_eigenvalues(x).minCoeff();
}

double spectral_radius_sym(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  return symmetric_eigenvalues(x).cwiseAbs().maxCoeff();
}

bool all_finite(const Matrix& x) { return x.allFinite(); }

Matrix spd_solve(const Matrix& x, const Matrix& rhs) {
  if (x.size() == 0) return Matrix::Zero(0, rhs.cols());
  Eigen::LLT<Matrix> llt(x);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);
  Eigen::LDLT<Matrix> ldlt(x);
  return ldlt.solve(rhs);
}

Matrix spd_inverse(const Matrix& x) {
  return spd_solve(x, Matrix::Identity(x.rows(), x.cols()));
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 32;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

MeanStdError mean_and_standard_error(std::span<const double> samples) {
  MeanStdError out;
  const auto count = samples.size();
  if (count == 0) return out;
  out.mean = pairwise_sum(samples) / static_cast<double>(count);
  if (count < 2) return out;
  std::vector<double> sq(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double d = samples[i] - out.mean;
    sq[i] = d * d;
  }
  const double variance = pairwise_sum(sq) / static_cast<double>(count - 1);
  out.standard_error = std::sqrt(variance / static_cast<double>(count));
  return out;
}

}  // namespace stochmin
