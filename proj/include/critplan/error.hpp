// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace critplan {

enum class ErrorCode {
  kInvalidArgument,
  kContractViolation,
  kNoActions,
  kBackend,
  kEmptyCandidates,
  kEmptyQuery,
  kIngestion,
  kImport,
  kTraining,
  kConfiguration,
  kPlanningFailure,
  kSearchFailure,
  kMissingArtifact,
  kEmptyResultSet,
  kIo,
};

const char* to_string(ErrorCode code) noexcept;

/// Base exception for everything the engine throws on purpose. The code
/// survives the C boundary as a status value.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Transient failure of a remote or scripted backend. Retried by callers
/// holding a RetryPolicy.
class BackendError : public Error {
 public:
  explicit BackendError(const std::string& message)
      : Error(ErrorCode::kBackend, message) {}
};

class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& message)
      : Error(ErrorCode::kContractViolation, message) {}
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  if (code == ErrorCode::kBackend) throw BackendError(message);
  if (code == ErrorCode::kContractViolation) throw ContractViolation(message);
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace critplan
