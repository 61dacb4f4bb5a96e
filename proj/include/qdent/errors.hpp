// Copyright 2026 The qdent Authors
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

#ifndef QDENT_ERRORS_HPP
#define QDENT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qdent {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    kOk = 0,
    kConfig = 2,
    kInputData = 3,
    kNumerical = 4,
};

class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::kNumerical; }
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
   public:
    using Error::Error;
};

// A value violates a type invariant (e.g. a non-physical density matrix).
class InvariantViolation : public Error {
   public:
    using Error::Error;
};

// Inverse relation has no root on the physical branch.
class NoPhysicalSolution : public Error {
   public:
    using Error::Error;
};

class RangeError : public Error {
   public:
    using Error::Error;
};

// Estimator cannot be evaluated or fitted on the supplied data.
class EstimationError : public Error {
   public:
    using Error::Error;
};

class ConfigError : public Error {
   public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::kConfig; }
};

class InputError : public Error {
   public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::kInputData; }
};

}  // namespace qdent

#endif  // QDENT_ERRORS_HPP
