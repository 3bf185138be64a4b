#include <doctest.h>

#include <random>

#include "support.hpp"

#include "geek/config.hpp"
#include "geek/engine.hpp"
#include "geek/retrieval.hpp"
#include "geek/scripted_backend.hpp"

using namespace geek;

namespace {

const Question kFig3{"fig3",
                     "Was the Thirteenth Amendment ratified before the First Folio was "
                     "published?"};

struct Fig3 {
    ScriptedBackend backend;
    CorpusIndex index;
    EngineConfig cfg;

    Fig3()
        : backend(ScriptedBackend::load_manifest(support::fixture_path("fig3_script.json"))) {
        index = build_corpus_index(load_corpus_jsonl(support::fixture_path("fig3_corpus.jsonl")),
                                   backend);
        AppConfig app;
        app.retrieval.k = 2;
        cfg = engine_config(app);
    }
};

} // namespace

TEST_CASE("names round-trip for actions and run modes") {
    for (ActionCode a : {ActionCode::FinalAnswer, ActionCode::AddDecomp,
                         ActionCode::RetrieveExtract, ActionCode::SelfAnswer})
        CHECK(action_code_name(a) != nullptr);
    CHECK(std::string(action_code_name(ActionCode::RetrieveExtract)) == "retrieve_extract");
    for (RunMode m : {RunMode::ZeroShot, RunMode::CoT, RunMode::De, RunMode::DeRE, RunMode::Full})
        CHECK(run_mode_from_string(run_mode_name(m)) == m);
    CHECK_THROWS_AS(run_mode_from_string("mystery"), Error);
}

TEST_CASE("validate_engine_config") {
    EngineConfig cfg;
    CHECK_NOTHROW(validate_engine_config(cfg));
    cfg.max_rounds = 0;
    CHECK_THROWS_AS(validate_engine_config(cfg), Error);
    cfg.max_rounds = 1;
    cfg.retrieval.k = 0;
    CHECK_THROWS_AS(validate_engine_config(cfg), Error);
    cfg.retrieval.k = 1;
    cfg.gen.max_new_tokens = 0;
    CHECK_THROWS_AS(validate_engine_config(cfg), Error);
}

TEST_CASE("apply_first_entry keeps only the first plan entry") {
    QuestionState s = make_state({"q", "Root?"});
    DecompPlan plan;
    plan.entries.push_back({"First sub?", "P1"});
    plan.entries.push_back({"Second sub?", "P2"});

    Trace trace(true);
    QuestionState next = apply_first_entry(s, plan, trace);
    REQUIRE(next.steps.size() == 1);
    CHECK(next.steps[0].question_text == "First sub?");
    CHECK(next.steps[0].pseudo_answer == "P1");
    REQUIRE(trace.size() == 1);
    CHECK(trace.events()[0].kind == TraceKind::StepAdded);
    CHECK(trace.events()[0].payload["index"] == 1);
    CHECK(trace.events()[0].payload["question"] == "First sub?");
    CHECK(trace.events()[0].payload["pseudo_answer"] == "P1");

    DecompPlan no_pseudo;
    no_pseudo.entries.push_back({"Bare sub?", ""});
    Trace t2(true);
    QuestionState bare = apply_first_entry(s, no_pseudo, t2);
    CHECK(bare.steps[0].pseudo_answer == std::nullopt);

    CHECK_THROWS_AS(apply_first_entry(s, DecompPlan{}, trace), Error);
}

TEST_CASE("select_action maps choices through both selectors") {
    QuestionState s0 = make_state({"q", "Root?"});
    QuestionState s1 = append_decomp(s0, "Sub?", std::nullopt);

    support::ScriptBuilder sb;
    sb.replies(support::as1_input(s0), {"[A]", "[B]"});
    sb.replies(support::as2_input(s1), {"[A]", "[B]"});
    ScriptedBackend backend(sb.manifest());
    EngineDeps deps{&backend, nullptr};
    EngineConfig cfg;

    Trace trace(true);
    CHECK(select_action(s0, deps, cfg, trace) == ActionCode::FinalAnswer);
    CHECK(select_action(s0, deps, cfg, trace) == ActionCode::AddDecomp);
    CHECK(select_action(s1, deps, cfg, trace) == ActionCode::RetrieveExtract);
    CHECK(select_action(s1, deps, cfg, trace) == ActionCode::SelfAnswer);

    REQUIRE(trace.size() == 12); // four (prompt, completion, action) triples
    const TraceEvent& chosen = trace.events()[2];
    CHECK(chosen.kind == TraceKind::ActionChosen);
    CHECK(chosen.payload["selector"] == "action_select1");
    CHECK(chosen.payload["choice"] == "A");
    CHECK(chosen.payload["action"] == "final_answer");
    CHECK(trace.events()[8].payload["selector"] == "action_select2");

    QuestionState done = with_verdict(s0, Verdict{YesNo::Yes, ""});
    CHECK_THROWS_AS(select_action(done, deps, cfg, trace), Error);
}

TEST_CASE("enforce_mode coerces illegal actions and records the override") {
    QuestionState s = make_state({"q", "Root?"});
    EngineDeps no_index{nullptr, nullptr};
    CorpusIndex index;
    EngineDeps with_index{nullptr, &index};

    auto run = [&](ActionCode action, RunMode mode, const EngineDeps& deps) {
        Trace trace(true);
        ActionCode out = enforce_mode(action, s, deps, mode, trace);
        return std::make_pair(out, trace);
    };

    for (RunMode mode : {RunMode::ZeroShot, RunMode::CoT}) {
        auto [action, trace] = run(ActionCode::AddDecomp, mode, with_index);
        CHECK(action == ActionCode::FinalAnswer);
        REQUIRE(trace.size() == 1);
        CHECK(trace.events()[0].kind == TraceKind::ModeOverride);
        CHECK(trace.events()[0].payload["from"] == "add_decomp");
        CHECK(trace.events()[0].payload["to"] == "final_answer");
        CHECK(trace.events()[0].payload["reason"] == "mode");
    }
    {
        auto [action, trace] = run(ActionCode::RetrieveExtract, RunMode::De, with_index);
        CHECK(action == ActionCode::SelfAnswer);
        CHECK(trace.events()[0].payload["reason"] == "mode");
    }
    {
        auto [action, trace] = run(ActionCode::RetrieveExtract, RunMode::DeRE, no_index);
        CHECK(action == ActionCode::SelfAnswer);
        CHECK(trace.events()[0].payload["reason"] == "no_index");
    }
    {
        auto [action, trace] = run(ActionCode::RetrieveExtract, RunMode::DeRE, with_index);
        CHECK(action == ActionCode::RetrieveExtract);
        CHECK(trace.size() == 0);
    }
    {
        auto [action, trace] = run(ActionCode::SelfAnswer, RunMode::De, with_index);
        CHECK(action == ActionCode::SelfAnswer);
        CHECK(trace.size() == 0);
    }
}

TEST_CASE("execute_action enforces pending-step legality") {
    support::ScriptBuilder sb;
    ScriptedBackend backend(sb.manifest());
    EngineDeps deps{&backend, nullptr};
    EngineConfig cfg;
    Trace trace(true);

    QuestionState s0 = make_state({"q", "Root?"});
    QuestionState s1 = append_decomp(s0, "Sub?", std::nullopt);

    auto expect_illegal = [&](const QuestionState& s, ActionCode action) {
        try {
            execute_action(s, action, deps, cfg, trace);
            FAIL("expected IllegalState");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::IllegalState);
        }
    };
    expect_illegal(s1, ActionCode::FinalAnswer);
    expect_illegal(s1, ActionCode::AddDecomp);
    expect_illegal(s0, ActionCode::RetrieveExtract);
    expect_illegal(s1, ActionCode::RetrieveExtract); // pending but no index
    expect_illegal(s0, ActionCode::SelfAnswer);

    EngineDeps no_backend{nullptr, nullptr};
    CHECK_THROWS_AS(execute_action(s0, ActionCode::FinalAnswer, no_backend, cfg, trace), Error);
}

TEST_CASE("dere solve reproduces the frozen golden trace byte for byte") {
    Fig3 fx;
    EngineDeps deps{&fx.backend, &fx.index};
    Trace trace(true);
    SolveResult result = solve(kFig3, deps, fx.cfg, trace);

    CHECK(result.verdict.answer == YesNo::No);
    CHECK(trace.to_jsonl() == support::read_file(support::fixture_path("fig3_trace.jsonl")));
    CHECK(traces_equal(trace, Trace::load_jsonl(support::fixture_path("fig3_trace.jsonl"))));

    REQUIRE(result.state.steps.size() == 3);
    CHECK(result.state.steps[0].resolution == Resolution::Retrieved);
    CHECK(result.state.steps[1].resolution == Resolution::Retrieved);
    CHECK(result.state.steps[2].resolution == Resolution::SelfAnswered);
    CHECK(result.state.steps[0].fact->find("1623") != std::string::npos);
    CHECK(result.state.steps[0].fact->find("1599") == std::string::npos);
    CHECK(trace.count(TraceKind::StepAdded) == 3);
}

TEST_CASE("zeroshot solve is a single generation call") {
    Fig3 fx;
    EngineDeps deps{&fx.backend, nullptr};
    fx.cfg.mode = RunMode::ZeroShot;

    Trace trace(true);
    SolveResult result = solve(kFig3, deps, fx.cfg, trace);
    CHECK(result.verdict.answer == YesNo::No);
    CHECK(result.state.steps.empty());
    REQUIRE(trace.size() == 2);
    CHECK(trace.events()[0].kind == TraceKind::PromptSent);
    CHECK(trace.events()[0].payload["purpose"] == "zero_shot");
    CHECK(trace.events()[1].kind == TraceKind::CompletionReceived);
    CHECK(trace.count(TraceKind::PromptSent) == 1);
}

TEST_CASE("cot solve concludes immediately without decomposition") {
    Fig3 fx;
    EngineDeps deps{&fx.backend, nullptr};
    fx.cfg.mode = RunMode::CoT;

    Trace trace(true);
    SolveResult result = solve(kFig3, deps, fx.cfg, trace);
    CHECK(result.verdict.answer == YesNo::No);
    CHECK(result.state.steps.empty());
    REQUIRE(trace.size() == 3);
    CHECK(trace.events()[0].payload["purpose"] == "final_answer");
    CHECK(trace.events()[2].kind == TraceKind::VerdictIssued);
    CHECK(trace.count(TraceKind::StepAdded) == 0);
}

TEST_CASE("de solve never retrieves") {
    Fig3 fx;
    EngineDeps deps{&fx.backend, &fx.index};
    fx.cfg.mode = RunMode::De;

    Trace trace(true);
    SolveResult result = solve(kFig3, deps, fx.cfg, trace);
    CHECK(result.verdict.answer == YesNo::No);
    REQUIRE(result.state.steps.size() == 3);
    for (const DecompStep& step : result.state.steps) {
        CHECK(step.resolution == Resolution::SelfAnswered);
        CHECK(step.paragraph_ids.empty());
    }
    for (const TraceEvent& event : trace.events())
        if (event.kind == TraceKind::StepResolved)
            CHECK(event.payload["resolution"] == "self_answered");
}

TEST_CASE("max_rounds forces a final answer") {
    std::mt19937 rng(11);
    Question q{"live", "Does the loop stop?"};
    support::LineageScript script = support::build_lineage_script(q, 3, rng, false);
    ScriptedBackend backend(script.manifest);
    EngineDeps deps{&backend, nullptr};
    EngineConfig cfg;
    cfg.max_rounds = 3;

    Trace trace(true);
    SolveResult result = solve(q, deps, cfg, trace);
    CHECK(result.verdict.answer == script.answer);
    CHECK(result.state.steps.size() == 3);
    CHECK(trace.count(TraceKind::ForcedFinal) == 1);
    for (const TraceEvent& event : trace.events())
        if (event.kind == TraceKind::ForcedFinal) CHECK(event.payload["rounds"] == 3);
}

TEST_CASE("solve failures carry the trace and record the cause") {
    // Script stops before the final answer entry, so the last call misses.
    std::mt19937 rng(12);
    Question q{"boom", "Does this blow up?"};
    support::LineageScript script = support::build_lineage_script(q, 1, rng, true);
    nlohmann::json manifest = script.manifest;
    manifest["responses"].erase(manifest["responses"].size() - 1);
    ScriptedBackend backend(manifest);
    EngineDeps deps{&backend, nullptr};
    EngineConfig cfg;

    Trace trace(true);
    try {
        solve(q, deps, cfg, trace);
        FAIL("expected SolveFailed");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SolveFailed);
        REQUIRE(e.trace != nullptr);
        CHECK(e.trace->size() == trace.size());
        const TraceEvent& last = trace.events().back();
        CHECK(last.kind == TraceKind::ErrorRaised);
        CHECK(last.payload["code"] == "script_miss");
    }
}

TEST_CASE("solve validates its inputs") {
    support::ScriptBuilder sb;
    ScriptedBackend backend(sb.manifest());
    EngineDeps deps{&backend, nullptr};
    EngineConfig cfg;
    Trace trace(true);

    try {
        cfg.mode = RunMode::Full;
        solve({"q", "Root?"}, deps, cfg, trace);
        FAIL("expected IllegalState");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IllegalState);
    }
    cfg.mode = RunMode::DeRE;
    CHECK_THROWS_AS(solve({"q", ""}, deps, cfg, trace), Error);
    EngineDeps no_backend{nullptr, nullptr};
    CHECK_THROWS_AS(solve({"q", "Root?"}, no_backend, cfg, trace), Error);
}

TEST_CASE("empty retrieval falls back to self answer, then to the pseudo answer") {
    CorpusIndex index;
    index.doc_index.dim = 2;
    index.doc_index.entries = {{"dA", "", {{1.0, 0.0}}}, {"dB", "", {{0.0, 1.0}}}};
    index.para_index.level = IndexLevel::Paragraph;
    index.para_index.dim = 2;
    index.para_index.entries = {{"pB1", "dB", {{0.0, 1.0}}}};
    index.para_texts["pB1"] = "beta text";

    QuestionState state = make_state({"q", "Root?"});
    state = append_decomp(state, "Unfindable sub?", std::string("1999"));
    std::string query =
        render_prompt(PromptKind::RetrieverQuery, state, {{"Decomp", "Unfindable sub?"}});

    EngineConfig cfg;
    cfg.retrieval = RetrievalConfig{1, 5};

    SUBCASE("self answer succeeds") {
        support::ScriptBuilder sb;
        sb.dim(2).embedding(query, {1.0, 0.0});
        sb.reply(support::self_answer_input(state), "Self-derived fact.");
        ScriptedBackend backend(sb.manifest());
        EngineDeps deps{&backend, &index};

        Trace trace(true);
        QuestionState next =
            execute_action(state, ActionCode::RetrieveExtract, deps, cfg, trace);
        CHECK(next.steps[0].resolution == Resolution::SelfAnswered);
        CHECK(next.steps[0].fact == "Self-derived fact.");
        bool overridden = false;
        for (const TraceEvent& event : trace.events())
            if (event.kind == TraceKind::ModeOverride &&
                event.payload["reason"] == "empty_retrieval")
                overridden = true;
        CHECK(overridden);
    }

    SUBCASE("self answer misses too, pseudo answer stands in") {
        support::ScriptBuilder sb;
        sb.dim(2).embedding(query, {1.0, 0.0});
        ScriptedBackend backend(sb.manifest());
        EngineDeps deps{&backend, &index};

        Trace trace(true);
        QuestionState next =
            execute_action(state, ActionCode::RetrieveExtract, deps, cfg, trace);
        CHECK(next.steps[0].resolution == Resolution::SelfAnswered);
        CHECK(next.steps[0].fact == "1999");
    }
}
