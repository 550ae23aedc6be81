#include "scout/error.hpp"

namespace scout {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonMonotoneFrames: return "NonMonotoneFrames";
    case ErrorCode::UnknownAgentType: return "UnknownAgentType";
    case ErrorCode::NonDivisibleRates: return "NonDivisibleRates";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::AllMaskedRow: return "AllMaskedRow";
    case ErrorCode::IsolatedNodeDegreeZero: return "IsolatedNodeDegreeZero";
    case ErrorCode::CoincidentAgents: return "CoincidentAgents";
    case ErrorCode::NoEligibleNodes: return "NoEligibleNodes";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::NonDifferentiableTarget: return "NonDifferentiableTarget";
    case ErrorCode::WrongVariant: return "WrongVariant";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "UnknownError";
}

// One exit code per error family so scripts can branch on failures.
int error_exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn:
    case ErrorCode::NonMonotoneFrames:
    case ErrorCode::UnknownAgentType:
    case ErrorCode::NonDivisibleRates:
    case ErrorCode::EmptyWindow:
    case ErrorCode::EmptyDataset:
      return 10;  // data ingestion
    case ErrorCode::ShapeMismatch:
    case ErrorCode::AllMaskedRow:
    case ErrorCode::IsolatedNodeDegreeZero:
    case ErrorCode::CoincidentAgents:
      return 20;  // numerics / graph
    case ErrorCode::NoEligibleNodes:
    case ErrorCode::MissingClass:
      return 30;  // loss / metrics
    case ErrorCode::NonFiniteGradient:
    case ErrorCode::NonFiniteLoss:
      return 40;  // training
    case ErrorCode::NonDifferentiableTarget:
    case ErrorCode::WrongVariant:
    case ErrorCode::SchemaMismatch:
      return 50;  // attribution / evaluation
    case ErrorCode::IoFailure:
      return 60;
    case ErrorCode::InvalidConfig:
      return 64;
  }
  return 70;
}

}  // namespace scout
