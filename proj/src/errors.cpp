#include "geek/errors.hpp"

namespace geek {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::PendingExists: return "pending_exists";
    case ErrorCode::EmptyDecomp: return "empty_decomp";
    case ErrorCode::NoPending: return "no_pending";
    case ErrorCode::EmptyFact: return "empty_fact";
    case ErrorCode::MissingSlot: return "missing_slot";
    case ErrorCode::UnknownKind: return "unknown_kind";
    case ErrorCode::UnparsableChoice: return "unparsable_choice";
    case ErrorCode::NoDecompFound: return "no_decomp_found";
    case ErrorCode::UnparsableVerdict: return "unparsable_verdict";
    case ErrorCode::Transport: return "transport";
    case ErrorCode::Malformed: return "malformed";
    case ErrorCode::ScriptMiss: return "script_miss";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::EmbedFailure: return "embed_failure";
    case ErrorCode::CorpusInvalid: return "corpus_invalid";
    case ErrorCode::EmptyIndex: return "empty_index";
    case ErrorCode::RetrievalEmpty: return "retrieval_empty";
    case ErrorCode::ReaderFailure: return "reader_failure";
    case ErrorCode::IllegalState: return "illegal_state";
    case ErrorCode::SolveFailed: return "solve_failed";
    case ErrorCode::AllUnparsable: return "all_unparsable";
    case ErrorCode::AllLineagesFailed: return "all_lineages_failed";
    case ErrorCode::FileMissing: return "file_missing";
    case ErrorCode::SchemaViolation: return "schema_violation";
    case ErrorCode::MissingPrediction: return "missing_prediction";
    case ErrorCode::IncompleteRefinement: return "incomplete_refinement";
    case ErrorCode::IoFailure: return "io_failure";
    case ErrorCode::Internal: return "internal";
    }
    return "internal";
}

} // namespace geek
