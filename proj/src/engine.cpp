#include "geek/engine.hpp"

#include <algorithm>
#include <memory>

#include "geek/explorer.hpp"
#include "geek/extract.hpp"
#include "geek/prompts.hpp"
#include "geek/traced_gen.hpp"

namespace geek {

namespace {

QuestionState final_answer_action(const QuestionState& state, EngineDeps& deps,
                                  const EngineConfig& cfg, Trace& trace) {
    std::string action = render_prompt(PromptKind::FinalAnswer, state);
    Completion c = traced_generate(*deps.backend, compose_input(state, action), cfg.gen,
                                   "final_answer", trace);
    Verdict verdict = parse_final_answer(c.text);
    nlohmann::ordered_json payload;
    payload["answer"] = yes_no_name(verdict.answer);
    payload["rationale"] = verdict.rationale;
    trace.record(TraceKind::VerdictIssued, std::move(payload));
    return with_verdict(state, verdict);
}

QuestionState add_decomp_action(const QuestionState& state, EngineDeps& deps,
                                const EngineConfig& cfg, Trace& trace) {
    std::vector<DecompPlan> plans = branch_decomps(state, deps, cfg, 1, trace);
    return apply_first_entry(state, plans.front(), trace);
}

void record_resolution(const QuestionState& state, Trace& trace) {
    const DecompStep& step = state.steps.back();
    nlohmann::ordered_json payload;
    payload["index"] = step.index;
    payload["resolution"] = resolution_name(step.resolution);
    payload["fact"] = step.fact.value_or("");
    payload["paragraph_ids"] = step.paragraph_ids;
    trace.record(TraceKind::StepResolved, std::move(payload));
}

void record_override(ActionCode from, ActionCode to, const char* reason, Trace& trace) {
    nlohmann::ordered_json payload;
    payload["from"] = action_code_name(from);
    payload["to"] = action_code_name(to);
    payload["reason"] = reason;
    trace.record(TraceKind::ModeOverride, std::move(payload));
}

QuestionState self_answer_action(const QuestionState& state, EngineDeps& deps,
                                 const EngineConfig& cfg, Trace& trace) {
    std::string fact = self_answer(state, *deps.backend, cfg.gen, trace);
    QuestionState next = resolve_step(state, fact, Resolution::SelfAnswered);
    record_resolution(next, trace);
    return next;
}

QuestionState retrieve_extract_action(const QuestionState& state, EngineDeps& deps,
                                      const EngineConfig& cfg, Trace& trace) {
    ExtractOutcome outcome;
    try {
        outcome = retrieve_and_extract(state, *deps.index, *deps.backend, cfg.retrieval,
                                       cfg.gen, trace);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::RetrievalEmpty) throw;
        // The corpus had nothing for this step; fall back to logic, then to
        // the pseudo answer, so the loop always progresses.
        record_override(ActionCode::RetrieveExtract, ActionCode::SelfAnswer,
                        "empty_retrieval", trace);
        QuestionState next;
        try {
            next = self_answer_action(state, deps, cfg, trace);
        } catch (const Error&) {
            const DecompStep* pending = state.pending_step();
            std::string fact = pending->pseudo_answer.value_or("");
            if (fact.empty()) fact = "unknown";
            next = resolve_step(state, fact, Resolution::SelfAnswered);
            record_resolution(next, trace);
        }
        return next;
    }
    std::vector<std::string> para_ids;
    for (const RetrievalHit& hit : outcome.hits) para_ids.push_back(hit.para_id);
    QuestionState next = resolve_step(state, outcome.fact, Resolution::Retrieved, para_ids);
    record_resolution(next, trace);
    return next;
}

} // namespace

const char* action_code_name(ActionCode action) {
    switch (action) {
    case ActionCode::FinalAnswer: return "final_answer";
    case ActionCode::AddDecomp: return "add_decomp";
    case ActionCode::RetrieveExtract: return "retrieve_extract";
    case ActionCode::SelfAnswer: return "self_answer";
    }
    return "unknown";
}

const char* run_mode_name(RunMode mode) {
    switch (mode) {
    case RunMode::ZeroShot: return "zeroshot";
    case RunMode::CoT: return "cot";
    case RunMode::De: return "de";
    case RunMode::DeRE: return "dere";
    case RunMode::Full: return "full";
    }
    return "unknown";
}

RunMode run_mode_from_string(const std::string& name) {
    for (RunMode mode : {RunMode::ZeroShot, RunMode::CoT, RunMode::De, RunMode::DeRE,
                         RunMode::Full})
        if (name == run_mode_name(mode)) return mode;
    raise(ErrorCode::InvalidArgument, "unknown run mode: " + name);
}

void validate_engine_config(const EngineConfig& cfg) {
    if (cfg.max_rounds < 1)
        raise(ErrorCode::InvalidArgument, "max_rounds must be >= 1");
    if (cfg.retrieval.k < 1 || cfg.retrieval.k_doc < 1)
        raise(ErrorCode::InvalidArgument, "k and k_doc must be >= 1");
    if (cfg.gen.max_new_tokens < 1)
        raise(ErrorCode::InvalidArgument, "max_new_tokens must be >= 1");
}

int decomp_round(const QuestionState& state) {
    return static_cast<int>(state.steps.size());
}

QuestionState apply_first_entry(const QuestionState& state, const DecompPlan& plan,
                                Trace& trace) {
    if (plan.entries.empty())
        raise(ErrorCode::InvalidArgument, "plan has no entries");
    const DecompEntry& first = plan.entries.front();
    QuestionState next = append_decomp(state, first.question_text,
                                       first.pseudo_answer.empty()
                                           ? std::optional<std::string>{}
                                           : std::optional<std::string>{first.pseudo_answer});
    nlohmann::ordered_json payload;
    payload["index"] = next.steps.back().index;
    payload["question"] = first.question_text;
    payload["pseudo_answer"] = first.pseudo_answer;
    trace.record(TraceKind::StepAdded, std::move(payload));
    return next;
}

ActionCode select_action(const QuestionState& state, EngineDeps& deps,
                         const EngineConfig& cfg, Trace& trace) {
    if (state.verdict)
        raise(ErrorCode::IllegalState, "cannot select an action after a verdict");

    bool pending = state.has_pending();
    std::string action_prompt =
        pending ? render_prompt(PromptKind::ActionSelect2, state,
                                {{"Decomp", state.pending_step()->question_text}})
                : render_prompt(PromptKind::ActionSelect1, state);
    const char* selector = pending ? "action_select2" : "action_select1";

    Completion c = traced_generate(*deps.backend, compose_input(state, action_prompt),
                                   cfg.gen, selector, trace);
    ActionChoice choice = parse_action_choice(c.text);

    ActionCode action;
    if (pending)
        action = choice == ActionChoice::A ? ActionCode::RetrieveExtract
                                           : ActionCode::SelfAnswer;
    else
        action = choice == ActionChoice::A ? ActionCode::FinalAnswer : ActionCode::AddDecomp;

    nlohmann::ordered_json payload;
    payload["selector"] = selector;
    payload["choice"] = choice == ActionChoice::A ? "A" : "B";
    payload["action"] = action_code_name(action);
    trace.record(TraceKind::ActionChosen, std::move(payload));
    return action;
}

ActionCode enforce_mode(ActionCode action, const QuestionState& state,
                        const EngineDeps& deps, RunMode mode, Trace& trace) {
    (void)state;
    if (action == ActionCode::AddDecomp &&
        (mode == RunMode::ZeroShot || mode == RunMode::CoT)) {
        record_override(action, ActionCode::FinalAnswer, "mode", trace);
        return ActionCode::FinalAnswer;
    }
    if (action == ActionCode::RetrieveExtract) {
        if (mode == RunMode::De) {
            record_override(action, ActionCode::SelfAnswer, "mode", trace);
            return ActionCode::SelfAnswer;
        }
        if (deps.index == nullptr) {
            record_override(action, ActionCode::SelfAnswer, "no_index", trace);
            return ActionCode::SelfAnswer;
        }
    }
    return action;
}

QuestionState execute_action(const QuestionState& state, ActionCode action, EngineDeps& deps,
                             const EngineConfig& cfg, Trace& trace) {
    if (deps.backend == nullptr)
        raise(ErrorCode::InvalidArgument, "engine requires a backend");
    bool pending = state.has_pending();
    switch (action) {
    case ActionCode::FinalAnswer:
        if (pending)
            raise(ErrorCode::IllegalState, "final answer with a pending decomposition");
        return final_answer_action(state, deps, cfg, trace);
    case ActionCode::AddDecomp:
        if (pending)
            raise(ErrorCode::IllegalState, "add decomp with a pending decomposition");
        return add_decomp_action(state, deps, cfg, trace);
    case ActionCode::RetrieveExtract:
        if (!pending)
            raise(ErrorCode::IllegalState, "retrieve without a pending decomposition");
        if (deps.index == nullptr)
            raise(ErrorCode::IllegalState, "retrieve requires a corpus index");
        return retrieve_extract_action(state, deps, cfg, trace);
    case ActionCode::SelfAnswer:
        if (!pending)
            raise(ErrorCode::IllegalState, "self answer without a pending decomposition");
        return self_answer_action(state, deps, cfg, trace);
    }
    raise(ErrorCode::Internal, "unhandled action");
}

QuestionState step(const QuestionState& state, EngineDeps& deps, const EngineConfig& cfg,
                   Trace& trace) {
    if (state.verdict)
        raise(ErrorCode::IllegalState, "cannot step a state that has a verdict");
    ActionCode action = select_action(state, deps, cfg, trace);
    action = enforce_mode(action, state, deps, cfg.mode, trace);
    return execute_action(state, action, deps, cfg, trace);
}

namespace {

SolveResult solve_impl(const Question& question, EngineDeps& deps, const EngineConfig& cfg,
                       Trace& trace) {
    QuestionState state = make_state(question);

    if (cfg.mode == RunMode::ZeroShot) {
        std::string prompt =
            render_prompt(PromptKind::System, state) + "\nAnswer yes or no: " + question.text;
        Completion c = traced_generate(*deps.backend, prompt, cfg.gen, "zero_shot", trace);
        Verdict verdict = parse_final_answer(c.text);
        return {verdict, with_verdict(state, verdict)};
    }

    if (cfg.mode == RunMode::CoT) {
        QuestionState done = final_answer_action(state, deps, cfg, trace);
        return {*done.verdict, done};
    }

    while (!state.verdict) {
        if (!state.has_pending() && decomp_round(state) >= cfg.max_rounds) {
            nlohmann::ordered_json payload;
            payload["rounds"] = decomp_round(state);
            trace.record(TraceKind::ForcedFinal, std::move(payload));
            state = final_answer_action(state, deps, cfg, trace);
            break;
        }
        state = step(state, deps, cfg, trace);
    }
    validate_state(state);
    return {*state.verdict, state};
}

} // namespace

SolveResult solve(const Question& question, EngineDeps& deps, const EngineConfig& cfg,
                  Trace& trace) {
    validate_engine_config(cfg);
    if (deps.backend == nullptr)
        raise(ErrorCode::InvalidArgument, "solve requires a backend");
    if (cfg.mode == RunMode::Full)
        raise(ErrorCode::IllegalState, "full mode is handled by explore, not solve");
    if (question.text.empty())
        raise(ErrorCode::InvalidArgument, "question text must be non-empty");

    try {
        return solve_impl(question, deps, cfg, trace);
    } catch (const Error& e) {
        nlohmann::ordered_json payload;
        payload["code"] = error_code_name(e.code());
        payload["message"] = e.what();
        trace.record(TraceKind::ErrorRaised, std::move(payload));
        Error failure(ErrorCode::SolveFailed, e.what());
        failure.trace = std::make_shared<const Trace>(trace);
        throw failure;
    }
}

} // namespace geek
