#include "geek/qstate.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace geek {

const char* resolution_name(Resolution r) {
    switch (r) {
    case Resolution::Pending: return "pending";
    case Resolution::Retrieved: return "retrieved";
    case Resolution::SelfAnswered: return "self_answered";
    }
    return "unknown";
}

const char* yes_no_name(YesNo v) {
    return v == YesNo::Yes ? "yes" : "no";
}

YesNo yes_no_from_string(const std::string& s) {
    std::string lowered;
    lowered.reserve(s.size());
    for (char c : s) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lowered == "yes") return YesNo::Yes;
    if (lowered == "no") return YesNo::No;
    raise(ErrorCode::InvalidArgument, "not a yes/no value: " + s);
}

bool QuestionState::has_pending() const {
    return !steps.empty() && steps.back().resolution == Resolution::Pending;
}

const DecompStep* QuestionState::pending_step() const {
    return has_pending() ? &steps.back() : nullptr;
}

QuestionState make_state(Question question) {
    QuestionState state;
    state.question = std::move(question);
    return state;
}

QuestionState append_decomp(const QuestionState& state, const std::string& d_text,
                            const std::optional<std::string>& pseudo) {
    if (state.has_pending())
        raise(ErrorCode::PendingExists, "cannot append a decomposition while one is pending");
    if (d_text.empty())
        raise(ErrorCode::EmptyDecomp, "decomposition text must be non-empty");
    QuestionState next = state;
    DecompStep step;
    step.index = static_cast<int>(next.steps.size()) + 1;
    step.question_text = d_text;
    step.pseudo_answer = pseudo;
    next.steps.push_back(std::move(step));
    return next;
}

QuestionState resolve_step(const QuestionState& state, const std::string& fact,
                           Resolution resolution,
                           const std::vector<std::string>& paragraph_ids) {
    if (!state.has_pending())
        raise(ErrorCode::NoPending, "no pending decomposition to resolve");
    if (fact.empty())
        raise(ErrorCode::EmptyFact, "fact must be non-empty");
    if (resolution == Resolution::Pending)
        raise(ErrorCode::InvalidArgument, "cannot resolve a step to pending");
    if (resolution == Resolution::Retrieved && paragraph_ids.empty())
        raise(ErrorCode::InvalidArgument, "retrieved resolution requires paragraph ids");
    QuestionState next = state;
    DecompStep& step = next.steps.back();
    step.fact = fact;
    step.resolution = resolution;
    step.paragraph_ids = resolution == Resolution::Retrieved ? paragraph_ids
                                                             : std::vector<std::string>{};
    return next;
}

QuestionState with_verdict(const QuestionState& state, Verdict verdict) {
    QuestionState next = state;
    next.verdict = std::move(verdict);
    return next;
}

std::string render_state(const QuestionState& state) {
    std::ostringstream out;
    out << state.question.text;
    for (const DecompStep& step : state.steps) {
        out << "\n(" << step.index << ") [Q] " << step.question_text;
        if (step.resolution != Resolution::Pending && step.fact)
            out << " [A] " << *step.fact;
    }
    return out.str();
}

QuestionState branch_copy(const QuestionState& state) {
    return state;
}

void validate_state(const QuestionState& state) {
    if (state.question.text.empty())
        raise(ErrorCode::IllegalState, "question text must be non-empty");
    for (std::size_t i = 0; i < state.steps.size(); ++i) {
        const DecompStep& step = state.steps[i];
        if (step.index != static_cast<int>(i) + 1)
            raise(ErrorCode::IllegalState, "step indices must be contiguous from 1");
        if (step.question_text.empty())
            raise(ErrorCode::IllegalState, "step question must be non-empty");
        if (step.resolution == Resolution::Pending) {
            if (i + 1 != state.steps.size())
                raise(ErrorCode::IllegalState, "only the last step may be pending");
            if (step.fact)
                raise(ErrorCode::IllegalState, "pending step cannot carry a fact");
        } else {
            if (!step.fact || step.fact->empty())
                raise(ErrorCode::IllegalState, "resolved step must carry a fact");
        }
        if (step.resolution == Resolution::Retrieved && step.paragraph_ids.empty())
            raise(ErrorCode::IllegalState, "retrieved step must carry paragraph ids");
        if (step.resolution != Resolution::Retrieved && !step.paragraph_ids.empty())
            raise(ErrorCode::IllegalState, "only retrieved steps carry paragraph ids");
    }
    if (state.verdict) {
        if (state.has_pending())
            raise(ErrorCode::IllegalState, "verdict-bearing state cannot have a pending step");
    }
}

bool states_equal(const QuestionState& a, const QuestionState& b) {
    return a.question.id == b.question.id && a.question.text == b.question.text &&
           a.steps == b.steps && a.verdict == b.verdict;
}

} // namespace geek
