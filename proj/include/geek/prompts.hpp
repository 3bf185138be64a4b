#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "geek/qstate.hpp"

namespace geek {

enum class PromptKind {
    System,
    ActionSelect1,
    FinalAnswer,
    AddDecomp,
    ActionSelect2,
    RetrieverQuery,
    ExtractorInput,
    SelfAnswer,
};

inline constexpr std::array<PromptKind, 8> kAllPromptKinds = {
    PromptKind::System,         PromptKind::ActionSelect1, PromptKind::FinalAnswer,
    PromptKind::AddDecomp,      PromptKind::ActionSelect2, PromptKind::RetrieverQuery,
    PromptKind::ExtractorInput, PromptKind::SelfAnswer,
};

const char* prompt_kind_name(PromptKind kind);
PromptKind prompt_kind_from_string(const std::string& name);

/// Raw template text for a kind, byte-identical to the resource file of the
/// same name under resources/prompts/.
const std::string& prompt_template(PromptKind kind);

enum class ActionChoice { A, B };

struct DecompEntry {
    std::string question_text;
    std::string pseudo_answer;

    bool operator==(const DecompEntry&) const = default;
};

struct DecompPlan {
    std::vector<DecompEntry> entries;

    bool operator==(const DecompPlan&) const = default;
};

/// Substitutes template placeholders verbatim from slots alone. Throws
/// MissingSlot naming the first unfilled placeholder.
std::string render_template(PromptKind kind, const std::map<std::string, std::string>& slots);

/// Same, but {Question_state} and {Q} are filled from the state when not
/// supplied in slots; explicit slots win.
std::string render_prompt(PromptKind kind, const QuestionState& state,
                          const std::map<std::string, std::string>& slots = {});

/// System prompt rendered over the state, a newline, then the action prompt.
std::string compose_input(const QuestionState& state, const std::string& action_prompt);

/// First bracketed "[A]"/"[B]" wins; otherwise the first standalone letter
/// a/b (case-insensitive). Throws UnparsableChoice when neither rule fires.
ActionChoice parse_action_choice(const std::string& completion);

/// Extracts every "[Q] ... [A] ..." group in order of appearance; numbering
/// tokens are ignored. Throws NoDecompFound when no entry survives.
DecompPlan parse_decomp_plan(const std::string& completion);

/// Case-insensitive "final answer is" followed by a yes/no token; falls back
/// to the last standalone yes/no token. Throws UnparsableVerdict otherwise.
Verdict parse_final_answer(const std::string& completion);

/// Inverse of parse_decomp_plan for plans without bracket markers inside
/// the texts: "(1) [Q] q [A] a (2) [Q] ...". Entries with an empty pseudo
/// answer omit the "[A]" segment. start_index shifts the numbering when a
/// plan continues existing steps.
std::string format_decomp_plan(const DecompPlan& plan, int start_index = 1);

} // namespace geek
