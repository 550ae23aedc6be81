#pragma once

#include <stdexcept>
#include <string>

namespace scout {

// Error families. The CLI maps each family to a distinct exit code.
enum class ErrorCode {
  // data ingestion
  MissingColumn,
  NonMonotoneFrames,
  UnknownAgentType,
  NonDivisibleRates,
  EmptyWindow,
  EmptyDataset,
  // numerics / graph
  ShapeMismatch,
  AllMaskedRow,
  IsolatedNodeDegreeZero,
  CoincidentAgents,
  // loss / metrics
  NoEligibleNodes,
  MissingClass,
  // training
  NonFiniteGradient,
  NonFiniteLoss,
  // attribution / evaluation
  NonDifferentiableTarget,
  WrongVariant,
  SchemaMismatch,
  // io / config
  IoFailure,
  InvalidConfig,
};

const char* error_code_name(ErrorCode code);
int error_exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool ok, ErrorCode code, const std::string& message) {
  if (!ok) fail(code, message);
}

}  // namespace scout
