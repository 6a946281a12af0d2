#include "htam/error.hpp"

namespace htam {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidGraph: return "InvalidGraph";
    case ErrorCode::kCyclicGraph: return "CyclicGraph";
    case ErrorCode::kNonMonotoneMerge: return "NonMonotoneMerge";
    case ErrorCode::kMissingNode: return "MissingNode";
    case ErrorCode::kNegativeBase: return "NegativeBase";
    case ErrorCode::kUnparseableSelection: return "UnparseableSelection";
    case ErrorCode::kEmptySelection: return "EmptySelection";
    case ErrorCode::kPlanningFailed: return "PlanningFailed";
    case ErrorCode::kNoListFound: return "NoListFound";
    case ErrorCode::kEmptyKeySet: return "EmptyKeySet";
    case ErrorCode::kBothEmpty: return "BothEmpty";
    case ErrorCode::kJudgeProtocolError: return "JudgeProtocolError";
    case ErrorCode::kInvalidTemplate: return "InvalidTemplate";
    case ErrorCode::kParameterizationMismatch: return "ParameterizationMismatch";
    case ErrorCode::kEmptyQuestion: return "EmptyQuestion";
    case ErrorCode::kProviderFailure: return "ProviderFailure";
    case ErrorCode::kTransport: return "Transport";
    case ErrorCode::kProtocol: return "Protocol";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace htam
