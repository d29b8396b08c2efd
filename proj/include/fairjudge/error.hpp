// Copyright 2026 The fairjudge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FAIRJUDGE_ERROR_HPP_
#define FAIRJUDGE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace fairjudge {

/// Process exit codes used by the CLI. Stable; documented in the README.
enum class ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kBackend = 3,
  kAnalysisUndefined = 4,
};

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ExitCode exit_code() const { return ExitCode::kInternal; }
};

/// Dataset/config parse failures and invariant violations.
class ValidationError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kConfig; }
};

/// A caller-side precondition does not hold (empty pair list, missing scores).
class PreconditionError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kConfig; }
};

class RenderError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kConfig; }
};

/// Transport failure talking to a backend. Carries the number of attempts made.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(what + " (after " + std::to_string(attempts) + " attempt" +
              (attempts == 1 ? "" : "s") + ")"),
        attempts_(attempts) {}
  int attempts() const { return attempts_; }
  ExitCode exit_code() const override { return ExitCode::kBackend; }

 private:
  int attempts_;
};

/// The backend answered, but not in the expected wire format.
class ProtocolError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kBackend; }
};

/// The backend cannot provide what was asked (e.g. no label token in top-k logprobs).
class CapabilityError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kBackend; }
};

/// A statistic is undefined for the given input (constant vector, too few points).
class UndefinedStatisticError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kAnalysisUndefined; }
};

/// Winrate aggregation could not cover every candidate.
class AggregationError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kAnalysisUndefined; }
};

/// The optimization loop failed; the partial trace has already been persisted.
class OptimizationError : public Error {
 public:
  OptimizationError(const std::string& what, ExitCode code)
      : Error(what), code_(code) {}
  ExitCode exit_code() const override { return code_; }

 private:
  ExitCode code_;
};

}  // namespace fairjudge

#endif  // FAIRJUDGE_ERROR_HPP_
