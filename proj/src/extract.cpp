#include "geek/extract.hpp"

#include "geek/prompts.hpp"
#include "geek/traced_gen.hpp"

namespace geek {

std::string build_extractor_prompt(const ExtractionRequest& request) {
    if (request.paragraphs.empty())
        raise(ErrorCode::InvalidArgument, "extraction request needs at least one paragraph");
    std::string out;
    for (std::size_t i = 0; i < request.paragraphs.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += render_template(PromptKind::ExtractorInput,
                               {{"decomp", request.decomp},
                                {"pseudo_answer", request.pseudo_answer},
                                {"paragraph", request.paragraphs[i].second}});
    }
    return out;
}

ExtractOutcome retrieve_and_extract(const QuestionState& state, const CorpusIndex& index,
                                    Backend& backend, const RetrievalConfig& cfg,
                                    const GenParams& gen, Trace& trace) {
    const DecompStep* pending = state.pending_step();
    if (pending == nullptr)
        raise(ErrorCode::NoPending, "retrieve_and_extract requires a pending decomposition");

    std::string query = render_prompt(PromptKind::RetrieverQuery, state,
                                      {{"Decomp", pending->question_text}});
    std::vector<RetrievalHit> hits = retrieve(query, index, backend, cfg);
    if (hits.empty())
        raise(ErrorCode::RetrievalEmpty, "no paragraphs retrieved for: " + query);

    ExtractionRequest request;
    request.decomp = pending->question_text;
    request.pseudo_answer = pending->pseudo_answer.value_or("");
    for (const RetrievalHit& hit : hits) {
        auto it = index.para_texts.find(hit.para_id);
        if (it == index.para_texts.end() || it->second.empty())
            raise(ErrorCode::ReaderFailure, "index carries no text for paragraph " + hit.para_id);
        request.paragraphs.emplace_back(hit.para_id, it->second);
    }

    Completion fused = traced_generate(backend, build_extractor_prompt(request), gen,
                                       "extractor_input", trace);
    if (fused.text.empty())
        raise(ErrorCode::ReaderFailure, "reader returned an empty fact");
    return {fused.text, hits};
}

std::string self_answer(const QuestionState& state, Backend& backend, const GenParams& gen,
                        Trace& trace) {
    const DecompStep* pending = state.pending_step();
    if (pending == nullptr)
        raise(ErrorCode::NoPending, "self_answer requires a pending decomposition");
    std::string action = render_prompt(PromptKind::SelfAnswer, state,
                                       {{"Decomp", pending->question_text}});
    Completion c = traced_generate(backend, compose_input(state, action), gen, "self_answer",
                                   trace);
    return c.text;
}

} // namespace geek
