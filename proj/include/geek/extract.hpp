#pragma once

#include <string>
#include <utility>
#include <vector>

#include "geek/backend.hpp"
#include "geek/qstate.hpp"
#include "geek/retrieval.hpp"
#include "geek/trace.hpp"

namespace geek {

struct ExtractionRequest {
    std::string decomp;
    std::string pseudo_answer;                                  // may be empty
    std::vector<std::pair<std::string, std::string>> paragraphs; // (para_id, text), hit order
};

/// One ExtractorInput prompt per paragraph, in hit order, joined by a blank
/// line. The reader receives all contexts in a single fused call.
std::string build_extractor_prompt(const ExtractionRequest& request);

struct ExtractOutcome {
    std::string fact;
    std::vector<RetrievalHit> hits;
};

/// Renders the retriever query from (q, pending d), retrieves top-k
/// paragraphs, and asks the reader for one fused fact.
ExtractOutcome retrieve_and_extract(const QuestionState& state, const CorpusIndex& index,
                                    Backend& backend, const RetrievalConfig& cfg,
                                    const GenParams& gen, Trace& trace);

/// Answers the pending decomposition by logical inference over the state.
std::string self_answer(const QuestionState& state, Backend& backend, const GenParams& gen,
                        Trace& trace);

} // namespace geek
