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

#ifndef PRIVSHIFT_ERROR_HPP_
#define PRIVSHIFT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace privshift {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateColumn,
  kSingularSystem,
  kTooFewRows,
  kInvalidBudget,
  kInfeasible,
  kEmptyArm,
  kAllReplicatesFailed,
  kDegenerateSample,
  kSchema,
  kIo,
};

const char* ErrorCodeName(ErrorCode code);

// All library failures are reported by throwing Error (or a subclass). The
// code is stable and is what the command-line front end maps to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Calibration could not satisfy the balance constraints. Carries the best
// constraint residual the solver reached.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& message, double constraint_residual,
                  int iterations);

  double constraint_residual() const noexcept { return constraint_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double constraint_residual_;
  int iterations_;
};

[[noreturn]] void Throw(ErrorCode code, const std::string& message);

}  // namespace privshift

#endif  // PRIVSHIFT_ERROR_HPP_
