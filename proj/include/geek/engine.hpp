#pragma once

#include <string>

#include "geek/backend.hpp"
#include "geek/prompts.hpp"
#include "geek/qstate.hpp"
#include "geek/retrieval.hpp"
#include "geek/trace.hpp"

namespace geek {

enum class ActionCode { FinalAnswer, AddDecomp, RetrieveExtract, SelfAnswer };

const char* action_code_name(ActionCode action);

enum class RunMode { ZeroShot, CoT, De, DeRE, Full };

const char* run_mode_name(RunMode mode);
RunMode run_mode_from_string(const std::string& name);

struct EngineDeps {
    Backend* backend = nullptr;
    const CorpusIndex* index = nullptr; // required only for RetrieveExtract
};

struct EngineConfig {
    int max_rounds = 8;
    RetrievalConfig retrieval;
    RunMode mode = RunMode::DeRE;
    GenParams gen;
};

void validate_engine_config(const EngineConfig& cfg);

struct SolveResult {
    Verdict verdict;
    QuestionState state;
};

/// Level-one or level-two action selection depending on whether a step is
/// pending. Returns the raw model choice before mode legality is applied.
ActionCode select_action(const QuestionState& state, EngineDeps& deps,
                         const EngineConfig& cfg, Trace& trace);

/// Coerces actions the run mode (or a missing index) makes illegal, emitting
/// a ModeOverride event when anything changes.
ActionCode enforce_mode(ActionCode action, const QuestionState& state,
                        const EngineDeps& deps, RunMode mode, Trace& trace);

/// Executes one already-selected action and returns the updated state.
QuestionState execute_action(const QuestionState& state, ActionCode action, EngineDeps& deps,
                             const EngineConfig& cfg, Trace& trace);

/// One full round: select, coerce, execute.
QuestionState step(const QuestionState& state, EngineDeps& deps, const EngineConfig& cfg,
                   Trace& trace);

/// Runs a single lineage to a verdict. ZeroShot and CoT are one-call modes;
/// De and DeRE iterate step, forcing a FinalAnswer once max_rounds
/// decompositions exist. Full mode lives in the explorer. Any failure is
/// recorded in the trace and rethrown as SolveFailed carrying a copy of it.
SolveResult solve(const Question& question, EngineDeps& deps, const EngineConfig& cfg,
                  Trace& trace);

/// Decompositions added so far (resolved or pending), used for the round cap
/// and branch-depth decisions.
int decomp_round(const QuestionState& state);

/// Appends a plan's first entry as the new pending step and records it; the
/// remaining entries only served as generation auxiliaries and are dropped.
QuestionState apply_first_entry(const QuestionState& state, const DecompPlan& plan,
                                Trace& trace);

} // namespace geek
