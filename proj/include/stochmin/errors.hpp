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

#include <stdexcept>
#include <string>

namespace stochmin {

enum class ErrorCode {
  kParseError,
  kMissingField,
  kDimensionMismatch,
  kInvalidField,
  kInvalidArgument,
  kValidationFailed,
  kRankDeficientD,
  kRiccatiBlowup,
  kNonsymmetric,
  kGainSingular,
  kNotControllable,
  kInfeasible,
  kSingularKkt,
  kNotAdmissible,
  kShapeMismatch,
};

/// Stable upper-case identifier, e.g. "RANK_DEFICIENT_D".
const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stochmin
