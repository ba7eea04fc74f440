#include "fpa/error.hpp"

namespace fpa {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::RaggedRow: return "RaggedRow";
        case ErrorCode::NonNumericCell: return "NonNumericCell";
        case ErrorCode::DuplicateRunId: return "DuplicateRunId";
        case ErrorCode::DuplicatePredicateId: return "DuplicatePredicateId";
        case ErrorCode::UnknownOutcomeToken: return "UnknownOutcomeToken";
        case ErrorCode::RunSetMismatch: return "RunSetMismatch";
        case ErrorCode::NoFailingRuns: return "NoFailingRuns";
        case ErrorCode::NoPassingRuns: return "NoPassingRuns";
        case ErrorCode::MalformedJson: return "MalformedJson";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::UnknownPredicate: return "UnknownPredicate";
        case ErrorCode::UnmappedPredicate: return "UnmappedPredicate";
        case ErrorCode::UnknownModule: return "UnknownModule";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::NotAPassingRun: return "NotAPassingRun";
        case ErrorCode::UnbalancedBraces: return "UnbalancedBraces";
        case ErrorCode::EmptyModule: return "EmptyModule";
        case ErrorCode::TooFewModules: return "TooFewModules";
        case ErrorCode::SingleClassInput: return "SingleClassInput";
        case ErrorCode::FPOutOfRange: return "FPOutOfRange";
        case ErrorCode::ThetaOutOfRange: return "ThetaOutOfRange";
        case ErrorCode::TooFewRunsForFolds: return "TooFewRunsForFolds";
        case ErrorCode::SingleClassFold: return "SingleClassFold";
        case ErrorCode::DegenerateInstance: return "DegenerateInstance";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

bool is_config_error(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::ConfigError:
        case ErrorCode::InvalidArgument:
        case ErrorCode::ThetaOutOfRange:
        case ErrorCode::KTooLarge:
            return true;
        default:
            return false;
    }
}

}  // namespace fpa
