#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geek/engine.hpp"
#include "geek/prompts.hpp"

namespace geek {

struct ExploreConfig {
    int n = 4;
    int leaf_cap = 16;
    int branch_depth = 2;
};

void validate_explore_config(const ExploreConfig& cfg);

struct BranchRecord {
    int lineage_id = 0;
    int parent_id = -1; // -1 for the root lineage
    int branch_round = 0;
    std::string decomp_text;
};

struct LeafRecord {
    int lineage_id = 0;
    std::optional<Verdict> verdict; // absent for failed lineages
    std::string failure;            // error text for failed lineages
    QuestionState state;
    Trace trace;
};

struct VoteTally {
    int yes = 0;
    int no = 0;
    int failed = 0;
};

struct StrategyTree {
    Question root;
    std::vector<BranchRecord> nodes;  // creation order, root first
    std::vector<LeafRecord> leaves;   // lineage id order
    VoteTally votes;
    int winner_lineage_id = -1;
};

/// n-best AddDecomp: generates n candidate plans, drops unparsable ones, and
/// deduplicates by normalized first sub-question, keeping score order.
std::vector<DecompPlan> branch_decomps(const QuestionState& state, EngineDeps& deps,
                                       const EngineConfig& cfg, int n, Trace& trace);

/// Strict majority wins; a tie goes to the first verdict in the list (the
/// earliest-created lineage). Rationale comes from the earliest leaf holding
/// the winning answer.
Verdict majority_vote(const std::vector<Verdict>& verdicts);

struct ExploreResult {
    Verdict verdict;
    StrategyTree tree;
};

/// Strategy exploration: forks each lineage at its first branch_depth
/// decomposition rounds via n-best plans, caps the tree at leaf_cap
/// endpoints, runs every lineage to a verdict, and majority-votes the leaves.
ExploreResult explore(const Question& question, EngineDeps& deps, const EngineConfig& cfg,
                      const ExploreConfig& xcfg, bool deterministic_trace = true);

/// Dedup key for beam plans: lowercased, whitespace collapsed, trailing
/// punctuation stripped first sub-question.
std::string normalize_decomp_key(const std::string& text);

} // namespace geek
