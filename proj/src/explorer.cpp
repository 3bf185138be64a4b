#include "geek/explorer.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <set>

#include "geek/traced_gen.hpp"

namespace geek {

namespace {

struct Task {
    int id = 0;
    QuestionState state;
    Trace trace;
};

void record_error(Trace& trace, const Error& e) {
    nlohmann::ordered_json payload;
    payload["code"] = error_code_name(e.code());
    payload["message"] = e.what();
    trace.record(TraceKind::ErrorRaised, std::move(payload));
}

QuestionState forced_final(const QuestionState& state, EngineDeps& deps,
                           const EngineConfig& cfg, Trace& trace) {
    nlohmann::ordered_json payload;
    payload["rounds"] = decomp_round(state);
    trace.record(TraceKind::ForcedFinal, std::move(payload));
    return execute_action(state, ActionCode::FinalAnswer, deps, cfg, trace);
}

} // namespace

void validate_explore_config(const ExploreConfig& cfg) {
    if (cfg.n < 1)
        raise(ErrorCode::InvalidArgument, "n must be >= 1");
    if (cfg.leaf_cap < 1)
        raise(ErrorCode::InvalidArgument, "leaf_cap must be >= 1");
    if (cfg.branch_depth < 0)
        raise(ErrorCode::InvalidArgument, "branch_depth must be >= 0");
}

std::string normalize_decomp_key(const std::string& text) {
    std::string out;
    bool in_space = true;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            in_space = false;
        }
    }
    while (!out.empty() &&
           (out.back() == ' ' || std::ispunct(static_cast<unsigned char>(out.back()))))
        out.pop_back();
    return out;
}

std::vector<DecompPlan> branch_decomps(const QuestionState& state, EngineDeps& deps,
                                       const EngineConfig& cfg, int n, Trace& trace) {
    if (n < 1)
        raise(ErrorCode::InvalidArgument, "n must be >= 1");
    if (state.has_pending())
        raise(ErrorCode::IllegalState, "cannot add decompositions while one is pending");

    std::string prompt = compose_input(state, render_prompt(PromptKind::AddDecomp, state));
    GenParams params = cfg.gen;
    params.num_sequences = n;
    std::vector<Completion> batch =
        traced_generate_n(*deps.backend, prompt, params, "add_decomp", trace);

    std::vector<DecompPlan> plans;
    std::set<std::string> seen;
    for (const Completion& c : batch) {
        DecompPlan plan;
        try {
            plan = parse_decomp_plan(c.text);
        } catch (const Error&) {
            continue;
        }
        std::string key = normalize_decomp_key(plan.entries.front().question_text);
        if (!seen.insert(key).second) continue;
        plans.push_back(std::move(plan));
        if (plans.size() == static_cast<std::size_t>(n)) break;
    }
    if (plans.empty())
        raise(ErrorCode::AllUnparsable, "no completion parsed into a decomposition plan");
    return plans;
}

Verdict majority_vote(const std::vector<Verdict>& verdicts) {
    if (verdicts.empty())
        raise(ErrorCode::InvalidArgument, "majority_vote requires at least one verdict");
    int yes = 0;
    for (const Verdict& v : verdicts)
        if (v.answer == YesNo::Yes) ++yes;
    int no = static_cast<int>(verdicts.size()) - yes;

    YesNo winner;
    if (yes != no)
        winner = yes > no ? YesNo::Yes : YesNo::No;
    else
        winner = verdicts.front().answer;
    for (const Verdict& v : verdicts)
        if (v.answer == winner) return v;
    return verdicts.front();
}

ExploreResult explore(const Question& question, EngineDeps& deps, const EngineConfig& cfg,
                      const ExploreConfig& xcfg, bool deterministic_trace) {
    validate_engine_config(cfg);
    validate_explore_config(xcfg);
    if (deps.backend == nullptr)
        raise(ErrorCode::InvalidArgument, "explore requires a backend");
    if (cfg.mode != RunMode::Full)
        raise(ErrorCode::IllegalState, "explore requires full mode");
    if (question.text.empty())
        raise(ErrorCode::InvalidArgument, "question text must be non-empty");

    // Lineages themselves run DeRE; Full is DeRE plus this tree search.
    EngineConfig lineage_cfg = cfg;
    lineage_cfg.mode = RunMode::DeRE;

    StrategyTree tree;
    tree.root = question;
    tree.nodes.push_back({0, -1, 0, ""});

    std::deque<Task> queue;
    queue.push_back({0, make_state(question), Trace(deterministic_trace)});
    int next_id = 1;

    while (!queue.empty()) {
        Task task = std::move(queue.front());
        queue.pop_front();
        try {
            while (!task.state.verdict) {
                bool pending = task.state.has_pending();
                int round = decomp_round(task.state);
                if (!pending && round >= lineage_cfg.max_rounds) {
                    task.state = forced_final(task.state, deps, lineage_cfg, task.trace);
                    break;
                }
                if (!pending && round < xcfg.branch_depth) {
                    ActionCode action = select_action(task.state, deps, lineage_cfg, task.trace);
                    action = enforce_mode(action, task.state, deps, lineage_cfg.mode, task.trace);
                    if (action == ActionCode::AddDecomp) {
                        std::vector<DecompPlan> plans =
                            branch_decomps(task.state, deps, lineage_cfg, xcfg.n, task.trace);
                        int endpoints = static_cast<int>(queue.size()) +
                                        static_cast<int>(tree.leaves.size()) + 1;
                        int budget = xcfg.leaf_cap - endpoints;
                        int keep = std::min(static_cast<int>(plans.size()),
                                            1 + std::max(0, budget));
                        for (int j = 1; j < keep; ++j) {
                            Task child;
                            child.id = next_id++;
                            child.state = branch_copy(task.state);
                            child.trace = task.trace;
                            const std::string& d = plans[j].entries.front().question_text;
                            nlohmann::ordered_json payload;
                            payload["lineage_id"] = child.id;
                            payload["parent_id"] = task.id;
                            payload["branch_round"] = round + 1;
                            payload["decomp_text"] = d;
                            child.trace.record(TraceKind::Branched, std::move(payload));
                            child.state = apply_first_entry(child.state, plans[j], child.trace);
                            tree.nodes.push_back({child.id, task.id, round + 1, d});
                            queue.push_back(std::move(child));
                        }
                        task.state = apply_first_entry(task.state, plans.front(), task.trace);
                    } else {
                        task.state = execute_action(task.state, action, deps, lineage_cfg,
                                                    task.trace);
                    }
                    continue;
                }
                task.state = step(task.state, deps, lineage_cfg, task.trace);
            }
            validate_state(task.state);
            LeafRecord leaf;
            leaf.lineage_id = task.id;
            leaf.verdict = task.state.verdict;
            leaf.state = task.state;
            leaf.trace = std::move(task.trace);
            tree.leaves.push_back(std::move(leaf));
        } catch (const Error& e) {
            record_error(task.trace, e);
            LeafRecord leaf;
            leaf.lineage_id = task.id;
            leaf.failure = e.what();
            leaf.state = task.state;
            leaf.trace = std::move(task.trace);
            tree.leaves.push_back(std::move(leaf));
        }
    }

    std::vector<Verdict> verdicts;
    for (const LeafRecord& leaf : tree.leaves) {
        if (leaf.verdict) {
            verdicts.push_back(*leaf.verdict);
            if (leaf.verdict->answer == YesNo::Yes)
                ++tree.votes.yes;
            else
                ++tree.votes.no;
        } else {
            ++tree.votes.failed;
        }
    }
    if (verdicts.empty())
        raise(ErrorCode::AllLineagesFailed, "no lineage produced a verdict");

    Verdict winner = majority_vote(verdicts);
    for (const LeafRecord& leaf : tree.leaves) {
        if (leaf.verdict && leaf.verdict->answer == winner.answer) {
            tree.winner_lineage_id = leaf.lineage_id;
            break;
        }
    }
    return {winner, tree};
}

} // namespace geek
