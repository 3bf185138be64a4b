#include "geek/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace geek {

namespace {

const std::string kTemplates[] = {
    "Try to solve a multi-step open-domain question. </s>{Question_state}",

    "Synthesis the information so far, what action should be performed the next? \n"
    "[A]: enough evidence to conclude a final answer. \n"
    "[B]: ask more sub-questions for necessary knowledge.",

    "Conclude a final answer to the question {Q}. Use the format \"Reasoning steps: "
    "[your reasoning steps] Therefore, the final answer is: [yes/no]\"",

    "Besides the current steps, what more sub-questions need to be asked? Show your "
    "steps in the format \"(i) [Q] (sub-question) [A] (pseudo answer)\"",

    "Does the sub-question {Decomp} involves external evidence to answer? \n"
    "[A]: external evidence is needed, call tools. \n"
    "[B]: it can be safely answered by logical inference without extra evidence",

    "Question: {Q}, Sub-question: {Decomp}",

    "Based on the following context, answer the question: \"{decomp}\" (A reference "
    "but not necessarily correct answer is: \"{pseudo_answer}\")</s>Context: {paragraph}",

    "Based on the sub-questions and facts, use strict logic to answer the sub-question: {Decomp}",
};

const char* kKindNames[] = {
    "system",          "action_select1", "final_answer",    "add_decomp",
    "action_select2",  "retriever_query", "extractor_input", "self_answer",
};

const char* kSlotNames[] = {"Question_state", "Q", "Decomp", "decomp", "pseudo_answer", "paragraph"};

bool is_slot_name(const std::string& name) {
    return std::find(std::begin(kSlotNames), std::end(kSlotNames), name) != std::end(kSlotNames);
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

std::string trimmed(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

std::string lowered(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

/// True when text[pos..pos+len) is bounded by non-word characters.
bool standalone_at(const std::string& text, std::size_t pos, std::size_t len) {
    if (pos > 0 && is_word_char(text[pos - 1])) return false;
    std::size_t end = pos + len;
    if (end < text.size() && is_word_char(text[end])) return false;
    return true;
}

/// Strips one trailing "(<digits>)" numbering token, if present.
std::string strip_trailing_number(const std::string& s) {
    std::string t = trimmed(s);
    if (t.empty() || t.back() != ')') return t;
    std::size_t open = t.rfind('(');
    if (open == std::string::npos) return t;
    bool digits = open + 1 < t.size() - 1;
    for (std::size_t i = open + 1; i + 1 < t.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(t[i]))) digits = false;
    if (!digits) return t;
    return trimmed(t.substr(0, open));
}

} // namespace

const char* prompt_kind_name(PromptKind kind) {
    return kKindNames[static_cast<int>(kind)];
}

PromptKind prompt_kind_from_string(const std::string& name) {
    for (int i = 0; i < static_cast<int>(std::size(kKindNames)); ++i)
        if (name == kKindNames[i]) return static_cast<PromptKind>(i);
    raise(ErrorCode::UnknownKind, "unknown prompt kind: " + name);
}

const std::string& prompt_template(PromptKind kind) {
    int i = static_cast<int>(kind);
    if (i < 0 || i >= static_cast<int>(std::size(kTemplates)))
        raise(ErrorCode::UnknownKind, "prompt kind out of range");
    return kTemplates[i];
}

std::string render_template(PromptKind kind, const std::map<std::string, std::string>& slots) {
    const std::string& tmpl = prompt_template(kind);
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        char c = tmpl[i];
        if (c != '{') {
            out.push_back(c);
            ++i;
            continue;
        }
        std::size_t close = tmpl.find('}', i + 1);
        if (close == std::string::npos) {
            out.append(tmpl, i, tmpl.size() - i);
            break;
        }
        std::string name = tmpl.substr(i + 1, close - i - 1);
        if (!is_slot_name(name)) {
            out.append(tmpl, i, close - i + 1);
            i = close + 1;
            continue;
        }
        auto it = slots.find(name);
        if (it == slots.end())
            raise(ErrorCode::MissingSlot, name);
        out += it->second;
        i = close + 1;
    }
    return out;
}

std::string render_prompt(PromptKind kind, const QuestionState& state,
                          const std::map<std::string, std::string>& slots) {
    std::map<std::string, std::string> filled = slots;
    filled.emplace("Question_state", render_state(state));
    filled.emplace("Q", state.question.text);
    return render_template(kind, filled);
}

std::string compose_input(const QuestionState& state, const std::string& action_prompt) {
    return render_prompt(PromptKind::System, state) + "\n" + action_prompt;
}

ActionChoice parse_action_choice(const std::string& completion) {
    std::string low = lowered(completion);
    std::size_t a = low.find("[a]");
    std::size_t b = low.find("[b]");
    if (a != std::string::npos || b != std::string::npos)
        return a < b ? ActionChoice::A : ActionChoice::B;
    std::string t = trimmed(low);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] != 'a' && t[i] != 'b') continue;
        if (!standalone_at(t, i, 1)) continue;
        return t[i] == 'a' ? ActionChoice::A : ActionChoice::B;
    }
    raise(ErrorCode::UnparsableChoice, "no [A]/[B] marker or standalone letter in: " + trimmed(completion));
}

DecompPlan parse_decomp_plan(const std::string& completion) {
    std::vector<std::size_t> q_marks;
    for (std::size_t pos = completion.find("[Q]"); pos != std::string::npos;
         pos = completion.find("[Q]", pos + 3))
        q_marks.push_back(pos);
    if (q_marks.empty())
        raise(ErrorCode::NoDecompFound, "no [Q] segment in completion");

    DecompPlan plan;
    for (std::size_t k = 0; k < q_marks.size(); ++k) {
        std::size_t begin = q_marks[k] + 3;
        bool bounded = k + 1 < q_marks.size();
        std::size_t end = bounded ? q_marks[k + 1] : completion.size();
        std::string region = completion.substr(begin, end - begin);

        DecompEntry entry;
        std::size_t a_mark = region.find("[A]");
        if (a_mark == std::string::npos) {
            entry.question_text = region;
        } else {
            entry.question_text = region.substr(0, a_mark);
            entry.pseudo_answer = region.substr(a_mark + 3);
        }
        entry.question_text = trimmed(entry.question_text);
        entry.pseudo_answer = trimmed(entry.pseudo_answer);
        if (bounded) {
            if (a_mark == std::string::npos)
                entry.question_text = strip_trailing_number(entry.question_text);
            else
                entry.pseudo_answer = strip_trailing_number(entry.pseudo_answer);
        }
        if (!entry.question_text.empty())
            plan.entries.push_back(std::move(entry));
    }
    if (plan.entries.empty())
        raise(ErrorCode::NoDecompFound, "every [Q] segment was empty");
    return plan;
}

Verdict parse_final_answer(const std::string& completion) {
    static const std::string kPattern = "final answer is";
    std::string low = lowered(completion);

    std::size_t at = low.find(kPattern);
    if (at != std::string::npos) {
        std::size_t pos = at + kPattern.size();
        while (pos < low.size() && !is_word_char(low[pos])) ++pos;
        for (const char* token : {"yes", "no"}) {
            std::size_t len = std::char_traits<char>::length(token);
            if (low.compare(pos, len, token) == 0 && standalone_at(low, pos, len)) {
                Verdict v;
                v.answer = token[0] == 'y' ? YesNo::Yes : YesNo::No;
                v.rationale = trimmed(completion.substr(0, at));
                return v;
            }
        }
    }

    for (std::size_t i = low.size(); i-- > 0;) {
        for (const char* token : {"yes", "no"}) {
            std::size_t len = std::char_traits<char>::length(token);
            if (low.compare(i, len, token) == 0 && standalone_at(low, i, len)) {
                Verdict v;
                v.answer = token[0] == 'y' ? YesNo::Yes : YesNo::No;
                v.rationale = trimmed(completion.substr(0, i));
                return v;
            }
        }
    }
    raise(ErrorCode::UnparsableVerdict, "no yes/no token in: " + trimmed(completion));
}

std::string format_decomp_plan(const DecompPlan& plan, int start_index) {
    std::ostringstream out;
    for (std::size_t i = 0; i < plan.entries.size(); ++i) {
        if (i > 0) out << " ";
        out << "(" << start_index + static_cast<int>(i) << ") [Q] "
            << plan.entries[i].question_text;
        if (!plan.entries[i].pseudo_answer.empty())
            out << " [A] " << plan.entries[i].pseudo_answer;
    }
    return out.str();
}

} // namespace geek
