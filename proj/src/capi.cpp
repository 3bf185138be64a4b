#include "geek/geek_c.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "geek/config.hpp"
#include "geek/engine.hpp"
#include "geek/errors.hpp"
#include "geek/evalkit.hpp"
#include "geek/explorer.hpp"
#include "geek/http_backend.hpp"
#include "geek/prompts.hpp"
#include "geek/qstate.hpp"
#include "geek/retrieval.hpp"
#include "geek/scripted_backend.hpp"
#include "geek/trace.hpp"

using nlohmann::json;
using nlohmann::ordered_json;

struct geek_backend {
    std::unique_ptr<geek::Backend> impl;
};

struct geek_index {
    geek::CorpusIndex impl;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_trace;

int status_of(geek::ErrorCode code) { return static_cast<int>(code) + 1; }

void remember_failure(const geek::Error& e) {
    g_last_error = e.what();
    g_last_trace = e.trace ? e.trace->to_jsonl() : std::string();
}

void remember_failure(const std::exception& e) {
    g_last_error = e.what();
    g_last_trace.clear();
}

template <typename F>
int wrap(F&& body) {
    try {
        body();
        g_last_error.clear();
        g_last_trace.clear();
        return GEEK_OK;
    } catch (const geek::Error& e) {
        remember_failure(e);
        return status_of(e.code());
    } catch (const std::exception& e) {
        remember_failure(e);
        return GEEK_ERR_UNKNOWN;
    }
}

char* dup_string(const std::string& text) {
    char* out = static_cast<char*>(std::malloc(text.size() + 1));
    if (out == nullptr) std::abort();
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

void require(bool ok, const char* what) {
    if (!ok) geek::raise(geek::ErrorCode::InvalidArgument, what);
}

void emit(char** out, const std::string& text) {
    require(out != nullptr, "output parameter must be non-null");
    *out = dup_string(text);
}

geek::AppConfig config_from_text(const char* config_json) {
    geek::AppConfig cfg;
    if (config_json != nullptr && *config_json != '\0') {
        json doc = json::parse(config_json, nullptr, false);
        if (doc.is_discarded())
            geek::raise(geek::ErrorCode::SchemaViolation, "config is not valid JSON");
        geek::apply_config_json(cfg, doc);
    }
    return cfg;
}

ordered_json state_to_json(const geek::QuestionState& state) {
    ordered_json steps = ordered_json::array();
    for (const geek::DecompStep& s : state.steps) {
        ordered_json step;
        step["index"] = s.index;
        step["question"] = s.question_text;
        step["pseudo_answer"] = s.pseudo_answer ? ordered_json(*s.pseudo_answer) : nullptr;
        step["fact"] = s.fact ? ordered_json(*s.fact) : nullptr;
        step["resolution"] = geek::resolution_name(s.resolution);
        step["paragraph_ids"] = s.paragraph_ids;
        steps.push_back(std::move(step));
    }
    ordered_json out;
    out["question_id"] = state.question.id;
    out["question"] = state.question.text;
    out["steps"] = std::move(steps);
    if (state.verdict) {
        ordered_json verdict;
        verdict["answer"] = geek::yes_no_name(state.verdict->answer);
        verdict["rationale"] = state.verdict->rationale;
        out["verdict"] = std::move(verdict);
    } else {
        out["verdict"] = nullptr;
    }
    return out;
}

ordered_json tree_to_json(const geek::StrategyTree& tree) {
    ordered_json nodes = ordered_json::array();
    for (const geek::BranchRecord& node : tree.nodes) {
        ordered_json rec;
        rec["lineage_id"] = node.lineage_id;
        rec["parent_id"] = node.parent_id;
        rec["branch_round"] = node.branch_round;
        rec["decomp_text"] = node.decomp_text;
        nodes.push_back(std::move(rec));
    }
    ordered_json votes;
    votes["yes"] = tree.votes.yes;
    votes["no"] = tree.votes.no;
    votes["failed"] = tree.votes.failed;
    ordered_json out;
    out["question_id"] = tree.root.id;
    out["question"] = tree.root.text;
    out["nodes"] = std::move(nodes);
    out["votes"] = std::move(votes);
    out["winner_lineage_id"] = tree.winner_lineage_id;
    return out;
}

ordered_json leaves_to_json(const geek::StrategyTree& tree) {
    ordered_json leaves = ordered_json::array();
    for (const geek::LeafRecord& leaf : tree.leaves) {
        ordered_json rec;
        rec["lineage_id"] = leaf.lineage_id;
        if (leaf.verdict) {
            rec["answer"] = geek::yes_no_name(leaf.verdict->answer);
            rec["rationale"] = leaf.verdict->rationale;
        } else {
            rec["failure"] = leaf.failure;
        }
        rec["state"] = state_to_json(leaf.state);
        rec["trace_jsonl"] = leaf.trace.to_jsonl();
        leaves.push_back(std::move(rec));
    }
    return leaves;
}

struct RunOutput {
    geek::Verdict verdict;
    geek::QuestionState state;
    ordered_json result;
};

RunOutput run_question(const geek::Question& question, geek::Backend& backend,
                       const geek::CorpusIndex* index, const geek::AppConfig& app) {
    geek::EngineDeps deps{&backend, index};
    geek::EngineConfig cfg = geek::engine_config(app);
    RunOutput out;
    out.result["mode"] = geek::run_mode_name(app.mode);
    if (app.mode == geek::RunMode::Full) {
        geek::ExploreResult result =
            geek::explore(question, deps, cfg, app.explore, app.deterministic);
        const geek::LeafRecord* winner = nullptr;
        for (const geek::LeafRecord& leaf : result.tree.leaves)
            if (leaf.lineage_id == result.tree.winner_lineage_id) winner = &leaf;
        if (winner == nullptr)
            geek::raise(geek::ErrorCode::Internal, "winning lineage has no leaf record");
        out.verdict = result.verdict;
        out.state = winner->state;
        out.result["answer"] = geek::yes_no_name(result.verdict.answer);
        out.result["rationale"] = result.verdict.rationale;
        out.result["state"] = state_to_json(winner->state);
        out.result["trace_jsonl"] = winner->trace.to_jsonl();
        out.result["tree"] = tree_to_json(result.tree);
        out.result["leaves"] = leaves_to_json(result.tree);
    } else {
        geek::Trace trace(app.deterministic);
        geek::SolveResult result = geek::solve(question, deps, cfg, trace);
        out.verdict = result.verdict;
        out.state = result.state;
        out.result["answer"] = geek::yes_no_name(result.verdict.answer);
        out.result["rationale"] = result.verdict.rationale;
        out.result["state"] = state_to_json(result.state);
        out.result["trace_jsonl"] = trace.to_jsonl();
    }
    return out;
}

std::map<std::string, std::string> slots_from_text(const char* slots_json) {
    std::map<std::string, std::string> slots;
    if (slots_json == nullptr || *slots_json == '\0') return slots;
    json doc = json::parse(slots_json, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        geek::raise(geek::ErrorCode::SchemaViolation, "slots must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (!value.is_string())
            geek::raise(geek::ErrorCode::SchemaViolation, "slot " + key + " must be a string");
        slots[key] = value.get<std::string>();
    }
    return slots;
}

} // namespace

extern "C" {

const char* geek_version(void) { return "0.1.0"; }

const char* geek_status_name(int status) {
    if (status == GEEK_OK) return "ok";
    if (status == GEEK_ERR_UNKNOWN) return "unknown";
    int first = status_of(geek::ErrorCode::InvalidArgument);
    int last = status_of(geek::ErrorCode::Internal);
    if (status < first || status > last) return "unknown";
    return geek::error_code_name(static_cast<geek::ErrorCode>(status - 1));
}

const char* geek_last_error(void) { return g_last_error.c_str(); }

const char* geek_last_trace_jsonl(void) { return g_last_trace.c_str(); }

void geek_string_free(char* text) { std::free(text); }

geek_backend* geek_backend_open_script(const char* manifest_path) {
    geek_backend* handle = nullptr;
    int rc = wrap([&] {
        require(manifest_path != nullptr, "manifest_path must be non-null");
        auto impl = std::make_unique<geek::ScriptedBackend>(
            geek::ScriptedBackend::load_manifest(manifest_path));
        handle = new geek_backend{std::move(impl)};
    });
    return rc == GEEK_OK ? handle : nullptr;
}

geek_backend* geek_backend_open_http(const char* base_url, int timeout_ms, int retries) {
    geek_backend* handle = nullptr;
    int rc = wrap([&] {
        require(base_url != nullptr && *base_url != '\0', "base_url must be non-empty");
        geek::HttpBackendConfig cfg;
        cfg.base_url = base_url;
        if (timeout_ms > 0) cfg.timeout_ms = timeout_ms;
        if (retries > 0) cfg.retries = retries;
        handle = new geek_backend{std::make_unique<geek::HttpBackend>(cfg)};
    });
    return rc == GEEK_OK ? handle : nullptr;
}

void geek_backend_close(geek_backend* backend) { delete backend; }

geek_index* geek_index_build(const char* corpus_jsonl_path, geek_backend* embedder) {
    geek_index* handle = nullptr;
    int rc = wrap([&] {
        require(corpus_jsonl_path != nullptr, "corpus_jsonl_path must be non-null");
        require(embedder != nullptr, "embedder must be non-null");
        std::vector<geek::CorpusDoc> corpus = geek::load_corpus_jsonl(corpus_jsonl_path);
        geek::validate_corpus(corpus);
        handle = new geek_index{geek::build_corpus_index(corpus, *embedder->impl)};
    });
    return rc == GEEK_OK ? handle : nullptr;
}

geek_index* geek_index_load(const char* path) {
    geek_index* handle = nullptr;
    int rc = wrap([&] {
        require(path != nullptr, "path must be non-null");
        handle = new geek_index{geek::load_corpus_index(path)};
    });
    return rc == GEEK_OK ? handle : nullptr;
}

int geek_index_save(const geek_index* index, const char* path) {
    return wrap([&] {
        require(index != nullptr, "index must be non-null");
        require(path != nullptr, "path must be non-null");
        geek::save_corpus_index(index->impl, path);
    });
}

void geek_index_close(geek_index* index) { delete index; }

int geek_index_query(const geek_index* index, geek_backend* embedder, const char* query,
                     int k, int k_doc, char** out_json) {
    return wrap([&] {
        require(index != nullptr, "index must be non-null");
        require(embedder != nullptr, "embedder must be non-null");
        require(query != nullptr && *query != '\0', "query must be non-empty");
        geek::RetrievalConfig cfg;
        if (k > 0) cfg.k = k;
        if (k_doc > 0) cfg.k_doc = k_doc;
        std::vector<geek::RetrievalHit> hits =
            geek::retrieve(query, index->impl, *embedder->impl, cfg);
        ordered_json doc = ordered_json::array();
        for (const geek::RetrievalHit& hit : hits) {
            ordered_json rec;
            rec["para_id"] = hit.para_id;
            rec["doc_id"] = hit.doc_id;
            rec["score"] = hit.score;
            doc.push_back(std::move(rec));
        }
        emit(out_json, doc.dump());
    });
}

int geek_config_resolve(const char* config_file_or_null, char** out_json) {
    return wrap([&] {
        std::string path;
        const std::string* path_ptr = nullptr;
        if (config_file_or_null != nullptr && *config_file_or_null != '\0') {
            path = config_file_or_null;
            path_ptr = &path;
        }
        geek::AppConfig cfg = geek::resolve_config(path_ptr);
        emit(out_json, geek::config_to_json(cfg).dump());
    });
}

int geek_solve(const char* question_id, const char* question_text, geek_backend* backend,
               const geek_index* index_or_null, const char* config_json, char** out_json) {
    return wrap([&] {
        require(question_text != nullptr && *question_text != '\0',
                "question_text must be non-empty");
        require(backend != nullptr, "backend must be non-null");
        geek::AppConfig app = config_from_text(config_json);
        geek::Question question{question_id != nullptr ? question_id : "q", question_text};
        const geek::CorpusIndex* index = index_or_null != nullptr ? &index_or_null->impl : nullptr;
        RunOutput out = run_question(question, *backend->impl, index, app);
        emit(out_json, out.result.dump());
    });
}

int geek_prompt_kinds(char** out_json) {
    return wrap([&] {
        ordered_json doc = ordered_json::array();
        for (geek::PromptKind kind : geek::kAllPromptKinds)
            doc.push_back(geek::prompt_kind_name(kind));
        emit(out_json, doc.dump());
    });
}

int geek_prompt_template(const char* kind, char** out_text) {
    return wrap([&] {
        require(kind != nullptr, "kind must be non-null");
        emit(out_text, geek::prompt_template(geek::prompt_kind_from_string(kind)));
    });
}

int geek_prompt_render(const char* kind, const char* question_or_null,
                       const char* slots_json_or_null, char** out_text) {
    return wrap([&] {
        require(kind != nullptr, "kind must be non-null");
        geek::PromptKind k = geek::prompt_kind_from_string(kind);
        std::map<std::string, std::string> slots = slots_from_text(slots_json_or_null);
        std::string text;
        if (question_or_null != nullptr && *question_or_null != '\0') {
            geek::QuestionState state = geek::make_state({"q", question_or_null});
            text = geek::render_prompt(k, state, slots);
        } else {
            text = geek::render_template(k, slots);
        }
        emit(out_text, text);
    });
}

int geek_data_load(const char* path, char** out_summary_json) {
    return wrap([&] {
        require(path != nullptr, "path must be non-null");
        std::vector<geek::StrategyQAItem> items = geek::load_dataset(path);
        std::size_t with_answers = 0;
        for (const geek::StrategyQAItem& item : items)
            if (item.answer.has_value()) ++with_answers;
        ordered_json doc;
        doc["count"] = items.size();
        doc["with_answers"] = with_answers;
        emit(out_summary_json, doc.dump());
    });
}

int geek_data_refine(const char* path, geek_backend* refiner, const char* out_path,
                     char** out_summary_json) {
    return wrap([&] {
        require(path != nullptr, "path must be non-null");
        require(refiner != nullptr, "refiner must be non-null");
        require(out_path != nullptr, "out_path must be non-null");
        std::vector<geek::StrategyQAItem> items = geek::load_dataset(path);
        std::vector<geek::RefinedItem> refined = geek::refine_annotations(items, *refiner->impl);
        geek::save_refined_jsonl(refined, out_path);
        ordered_json unrefined = ordered_json::array();
        std::size_t ok = 0;
        for (const geek::RefinedItem& item : refined) {
            if (item.refined)
                ++ok;
            else
                unrefined.push_back(item.base.qid);
        }
        ordered_json doc;
        doc["total"] = refined.size();
        doc["refined"] = ok;
        doc["unrefined"] = std::move(unrefined);
        emit(out_summary_json, doc.dump());
    });
}

int geek_data_pairs(const char* refined_path, const geek_index* index_or_null,
                    const char* out_path, char** out_summary_json) {
    return wrap([&] {
        require(refined_path != nullptr, "refined_path must be non-null");
        require(out_path != nullptr, "out_path must be non-null");
        std::vector<geek::RefinedItem> refined = geek::load_refined_jsonl(refined_path);
        const std::map<std::string, std::string>* para_texts =
            index_or_null != nullptr ? &index_or_null->impl.para_texts : nullptr;
        std::vector<std::string> skipped;
        std::vector<geek::TrainingPair> pairs =
            geek::build_training_pairs(refined, para_texts, &skipped);
        geek::save_training_pairs(pairs, out_path);
        ordered_json doc;
        doc["pairs"] = pairs.size();
        doc["skipped"] = skipped;
        emit(out_summary_json, doc.dump());
    });
}

int geek_data_score(const char* predictions_path, const char* gold_path,
                    double* out_accuracy) {
    return wrap([&] {
        require(predictions_path != nullptr, "predictions_path must be non-null");
        require(gold_path != nullptr, "gold_path must be non-null");
        require(out_accuracy != nullptr, "out_accuracy must be non-null");
        std::map<std::string, bool> predictions = geek::load_predictions(predictions_path);
        std::vector<geek::StrategyQAItem> gold = geek::load_dataset(gold_path);
        *out_accuracy = geek::score_accuracy(predictions, gold);
    });
}

int geek_data_predict(const char* gold_path, geek_backend* backend,
                      const geek_index* index_or_null, const char* config_json,
                      const char* out_path, char** out_summary_json) {
    return wrap([&] {
        require(gold_path != nullptr, "gold_path must be non-null");
        require(backend != nullptr, "backend must be non-null");
        require(out_path != nullptr, "out_path must be non-null");
        geek::AppConfig app = config_from_text(config_json);
        const geek::CorpusIndex* index = index_or_null != nullptr ? &index_or_null->impl : nullptr;
        std::vector<geek::StrategyQAItem> items = geek::load_dataset(gold_path);
        std::vector<geek::PredictionRecord> records;
        std::vector<std::string> warnings;
        ordered_json skipped = ordered_json::array();
        for (const geek::StrategyQAItem& item : items) {
            try {
                geek::Question question{item.qid, item.question};
                RunOutput out = run_question(question, *backend->impl, index, app);
                geek::PredictionRecord record;
                record.qid = item.qid;
                record.verdict = out.verdict;
                std::set<std::string> seen;
                for (const geek::DecompStep& step : out.state.steps) {
                    record.decomposition.push_back(step.question_text);
                    for (const std::string& pid : step.paragraph_ids)
                        if (seen.insert(pid).second) record.paragraphs.push_back(pid);
                }
                records.push_back(std::move(record));
            } catch (const geek::Error& e) {
                skipped.push_back(item.qid);
                warnings.push_back(item.qid + ": " + e.what());
            }
        }
        geek::write_predictions(records, out_path, &warnings);
        ordered_json doc;
        doc["total"] = items.size();
        doc["predicted"] = records.size();
        doc["skipped"] = std::move(skipped);
        doc["warnings"] = warnings;
        emit(out_summary_json, doc.dump());
    });
}

} // extern "C"
