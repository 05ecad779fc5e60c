// Copyright 2026 The freeflow Authors
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

#ifndef FREEFLOW_ERROR_HPP
#define FREEFLOW_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace freeflow {

enum class ErrorKind {
  InvalidMesh,
  TriangleInequalityViolated,
  NonManifold,
  NonOrientable,
  Disconnected,
  InvalidParams,
  DegenerateFace,
  RankUnstable,
  SolverFailure,
  TooManyAtoms,
  NotConverged,
  PreconditionViolated,
  UnboundedSequence,
  ParseError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidMesh: return "InvalidMesh";
    case ErrorKind::TriangleInequalityViolated: return "TriangleInequalityViolated";
    case ErrorKind::NonManifold: return "NonManifold";
    case ErrorKind::NonOrientable: return "NonOrientable";
    case ErrorKind::Disconnected: return "Disconnected";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::DegenerateFace: return "DegenerateFace";
    case ErrorKind::RankUnstable: return "RankUnstable";
    case ErrorKind::SolverFailure: return "SolverFailure";
    case ErrorKind::TooManyAtoms: return "TooManyAtoms";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::PreconditionViolated: return "PreconditionViolated";
    case ErrorKind::UnboundedSequence: return "UnboundedSequence";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace freeflow

#endif  // FREEFLOW_ERROR_HPP
