//
// Copyright 2026 The privshift Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "privshift/error.hpp"

namespace privshift {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
    case ErrorCode::kDegenerateColumn:
      return "DegenerateColumn";
    case ErrorCode::kSingularSystem:
      return "SingularSystem";
    case ErrorCode::kTooFewRows:
      return "TooFewRows";
    case ErrorCode::kInvalidBudget:
      return "InvalidBudget";
    case ErrorCode::kInfeasible:
      return "Infeasible";
    case ErrorCode::kEmptyArm:
      return "EmptyArm";
    case ErrorCode::kAllReplicatesFailed:
      return "AllReplicatesFailed";
    case ErrorCode::kDegenerateSample:
      return "DegenerateSample";
    case ErrorCode::kSchema:
      return "Schema";
    case ErrorCode::kIo:
      return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

InfeasibleError::InfeasibleError(const std::string& message,
                                 double constraint_residual, int iterations)
    : Error(ErrorCode::kInfeasible, message),
      constraint_residual_(constraint_residual),
      iterations_(iterations) {}

void Throw(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace privshift
