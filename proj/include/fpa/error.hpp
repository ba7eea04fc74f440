#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fpa {

// Every failure the library reports carries one of these codes so the CLI can
// map it onto an exit status without parsing messages.
enum class ErrorCode {
    // ingestion
    IoError,
    MalformedHeader,
    RaggedRow,
    NonNumericCell,
    DuplicateRunId,
    DuplicatePredicateId,
    UnknownOutcomeToken,
    RunSetMismatch,
    NoFailingRuns,
    NoPassingRuns,
    MalformedJson,
    UnknownNode,
    UnknownPredicate,
    UnmappedPredicate,
    UnknownModule,
    // cc-cleaner
    KTooLarge,
    LengthMismatch,
    NotAPassingRun,
    // metrics / fault-proneness
    UnbalancedBraces,
    EmptyModule,
    TooFewModules,
    SingleClassInput,
    FPOutOfRange,
    ThetaOutOfRange,
    // enet
    TooFewRunsForFolds,
    SingleClassFold,
    // synth / config
    DegenerateInstance,
    ConfigError,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

// Configuration problems (bad flags, out-of-range parameters) as opposed to
// problems with the data being analysed.
bool is_config_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

    ErrorCode code() const noexcept { return code_; }
    // the message without the code prefix
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace fpa
