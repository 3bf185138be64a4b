#include "geek/traced_gen.hpp"

namespace geek {

namespace {

void record_prompt(Trace& trace, const char* purpose, const std::string& prompt,
                   int num_sequences) {
    nlohmann::ordered_json payload;
    payload["purpose"] = purpose;
    payload["prompt"] = prompt;
    payload["num_sequences"] = num_sequences;
    trace.record(TraceKind::PromptSent, std::move(payload));
}

void record_completions(Trace& trace, const char* purpose,
                        const std::vector<Completion>& completions) {
    nlohmann::ordered_json texts = nlohmann::ordered_json::array();
    for (const Completion& c : completions) texts.push_back(c.text);
    nlohmann::ordered_json payload;
    payload["purpose"] = purpose;
    payload["texts"] = std::move(texts);
    trace.record(TraceKind::CompletionReceived, std::move(payload));
}

} // namespace

Completion traced_generate(Backend& backend, const std::string& prompt,
                           const GenParams& params, const char* purpose, Trace& trace) {
    record_prompt(trace, purpose, prompt, 1);
    GenParams single = params;
    single.num_sequences = 1;
    Completion c = backend.generate(prompt, single);
    record_completions(trace, purpose, {c});
    return c;
}

std::vector<Completion> traced_generate_n(Backend& backend, const std::string& prompt,
                                          const GenParams& params, const char* purpose,
                                          Trace& trace) {
    record_prompt(trace, purpose, prompt, params.num_sequences);
    std::vector<Completion> batch = backend.generate_n(prompt, params);
    record_completions(trace, purpose, batch);
    return batch;
}

} // namespace geek
