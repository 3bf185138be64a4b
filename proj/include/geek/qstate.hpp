#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geek/errors.hpp"

namespace geek {

struct Question {
    std::string id;
    std::string text;
};

enum class Resolution { Pending, Retrieved, SelfAnswered };

const char* resolution_name(Resolution r);

struct DecompStep {
    int index = 0; // 1-based
    std::string question_text;
    std::optional<std::string> pseudo_answer;
    std::optional<std::string> fact;
    Resolution resolution = Resolution::Pending;
    std::vector<std::string> paragraph_ids; // non-empty iff Retrieved

    bool operator==(const DecompStep&) const = default;
};

enum class YesNo { Yes, No };

const char* yes_no_name(YesNo v);
YesNo yes_no_from_string(const std::string& s);

struct Verdict {
    YesNo answer = YesNo::No;
    std::string rationale;

    bool operator==(const Verdict&) const = default;
};

/// The evolving question state: the original question plus the ordered
/// (decomposition, fact) history. At most one step may be Pending and it
/// is always the last one. Immutable in practice: operations return new
/// values so solve lineages stay independent.
struct QuestionState {
    Question question;
    std::vector<DecompStep> steps;
    std::optional<Verdict> verdict;

    bool has_pending() const;
    const DecompStep* pending_step() const;
};

QuestionState make_state(Question question);

/// Appends a new Pending step carrying d_text and its pseudo answer.
QuestionState append_decomp(const QuestionState& state, const std::string& d_text,
                            const std::optional<std::string>& pseudo);

/// Resolves the Pending step with a fact. Retrieved resolutions carry the
/// supporting paragraph ids in retrieval order.
QuestionState resolve_step(const QuestionState& state, const std::string& fact,
                           Resolution resolution,
                           const std::vector<std::string>& paragraph_ids = {});

QuestionState with_verdict(const QuestionState& state, Verdict verdict);

/// Deterministic serialization used inside prompts: the question text, then
/// one line per step, "(i) [Q] <question> [A] <fact>"; a Pending step has no
/// "[A]" segment.
std::string render_state(const QuestionState& state);

/// Independent copy of a state for strategy exploration.
QuestionState branch_copy(const QuestionState& state);

/// Throws IllegalState when a structural invariant is violated.
void validate_state(const QuestionState& state);

bool states_equal(const QuestionState& a, const QuestionState& b);

} // namespace geek
