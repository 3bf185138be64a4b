#pragma once

#include <memory>
#include <stdexcept>
#include <string>

namespace geek {

class Trace;

enum class ErrorCode {
    InvalidArgument,
    // question state
    PendingExists,
    EmptyDecomp,
    NoPending,
    EmptyFact,
    // prompts
    MissingSlot,
    UnknownKind,
    UnparsableChoice,
    NoDecompFound,
    UnparsableVerdict,
    // backend
    Transport,
    Malformed,
    ScriptMiss,
    DimensionMismatch,
    // retrieval
    EmbedFailure,
    CorpusInvalid,
    EmptyIndex,
    // extraction
    RetrievalEmpty,
    ReaderFailure,
    // engine / explorer
    IllegalState,
    SolveFailed,
    AllUnparsable,
    AllLineagesFailed,
    // dataset
    FileMissing,
    SchemaViolation,
    MissingPrediction,
    IncompleteRefinement,
    IoFailure,
    Internal,
};

const char* error_code_name(ErrorCode code);

/// Exception carrying a stable error code. SolveFailed errors additionally
/// carry the trace accumulated up to the failure point.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    std::shared_ptr<const Trace> trace;

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace geek
