// Copyright 2026 The Genex Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace genex {

enum class ErrorCode {
  InvalidInput,
  UnparsableGeneric,
  InvalidKind,
  SubtypeProviderError,
  NoPromptsForTemplate,
  ConstraintCompileError,
  ScorerMismatch,
  RankingError,
  ConfigurationError,
  ScorerUnavailable,
  MissingLabel,
  InputMismatch,
  IoError,
  ProtocolError,
};

inline std::string_view errorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::UnparsableGeneric: return "UnparsableGeneric";
    case ErrorCode::InvalidKind: return "InvalidKind";
    case ErrorCode::SubtypeProviderError: return "SubtypeProviderError";
    case ErrorCode::NoPromptsForTemplate: return "NoPromptsForTemplate";
    case ErrorCode::ConstraintCompileError: return "ConstraintCompileError";
    case ErrorCode::ScorerMismatch: return "ScorerMismatch";
    case ErrorCode::RankingError: return "RankingError";
    case ErrorCode::ConfigurationError: return "ConfigurationError";
    case ErrorCode::ScorerUnavailable: return "ScorerUnavailable";
    case ErrorCode::MissingLabel: return "MissingLabel";
    case ErrorCode::InputMismatch: return "InputMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ProtocolError: return "ProtocolError";
  }
  return "Unknown";
}

// All library failures are reported as Error; code() identifies the failure
// class so callers can decide between skipping a unit of work and aborting.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(errorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace genex
