#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <geek/geek_c.h>

namespace {

using nlohmann::json;

struct OwnedString {
    char* ptr = nullptr;
    ~OwnedString() { geek_string_free(ptr); }
    std::string str() const { return ptr != nullptr ? std::string(ptr) : std::string(); }
};

struct BackendHandle {
    geek_backend* ptr = nullptr;
    ~BackendHandle() { geek_backend_close(ptr); }
};

struct IndexHandle {
    geek_index* ptr = nullptr;
    ~IndexHandle() { geek_index_close(ptr); }
};

int fail(const std::string& doing) {
    std::cerr << "error: " << doing;
    std::string detail = geek_last_error();
    if (!detail.empty()) std::cerr << ": " << detail;
    std::cerr << "\n";
    return 1;
}

int fail(const std::string& doing, int rc) {
    std::cerr << "error: " << doing;
    std::string detail = geek_last_error();
    if (!detail.empty()) std::cerr << ": " << detail;
    std::cerr << " [" << geek_status_name(rc) << "]\n";
    return 1;
}

bool read_file(const std::string& path, std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::ostringstream buffer;
    buffer << in.rdbuf();
    out = buffer.str();
    return true;
}

bool write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out << text;
    return static_cast<bool>(out);
}

geek_backend* open_backend(const std::string& spec, int timeout_ms, int retries) {
    const std::string prefix = "script:";
    if (spec.rfind(prefix, 0) == 0)
        return geek_backend_open_script(spec.substr(prefix.size()).c_str());
    return geek_backend_open_http(spec.c_str(), timeout_ms, retries);
}

/// Flags shared by every subcommand that runs the engine. Each CLI::Option
/// pointer tells us whether the user actually passed the flag, so only
/// explicit flags override the resolved config.
struct RunFlags {
    std::string config_file;
    std::string backend_spec;
    std::string index_path;
    std::string mode;
    int max_rounds = 0;
    int k = 0;
    int k_doc = 0;
    int n = 0;
    int leaf_cap = 0;
    int branch_depth = 0;
    int max_new_tokens = 0;
    int timeout_ms = 0;
    int retries = 0;
    bool explore = false;
    bool wall_clock = false;

    CLI::Option* backend_opt = nullptr;
    CLI::Option* index_opt = nullptr;
    CLI::Option* mode_opt = nullptr;
    CLI::Option* max_rounds_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* k_doc_opt = nullptr;
    CLI::Option* n_opt = nullptr;
    CLI::Option* leaf_cap_opt = nullptr;
    CLI::Option* branch_depth_opt = nullptr;
    CLI::Option* max_new_tokens_opt = nullptr;
    CLI::Option* timeout_opt = nullptr;
    CLI::Option* retries_opt = nullptr;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config_file, "Config file (JSON)");
    f.backend_opt = cmd->add_option(
        "--backend", f.backend_spec,
        "Inference backend: an http(s) base URL or script:<manifest.json>");
    f.index_opt = cmd->add_option("--corpus-index", f.index_path, "Saved corpus index file");
    f.mode_opt = cmd->add_option("--mode", f.mode, "Run mode: zeroshot|cot|de|dere|full");
    f.max_rounds_opt = cmd->add_option("--max-rounds", f.max_rounds,
                                       "Decompositions allowed before a final answer is forced");
    f.k_opt = cmd->add_option("--k", f.k, "Paragraphs returned per retrieval");
    f.k_doc_opt = cmd->add_option("--k-doc", f.k_doc, "Documents retained by retrieval stage one");
    cmd->add_flag("--explore", f.explore, "Shorthand for --mode full");
    f.n_opt = cmd->add_option("--n", f.n, "Strategy beams per branch point");
    f.leaf_cap_opt = cmd->add_option("--leaf-cap", f.leaf_cap, "Maximum exploration endpoints");
    f.branch_depth_opt =
        cmd->add_option("--branch-depth", f.branch_depth, "Rounds that may branch per lineage");
    f.max_new_tokens_opt =
        cmd->add_option("--max-new-tokens", f.max_new_tokens, "Generation budget per call");
    f.timeout_opt = cmd->add_option("--timeout-ms", f.timeout_ms, "HTTP backend timeout");
    f.retries_opt =
        cmd->add_option("--retries", f.retries, "Extra HTTP attempts on connection failure");
    cmd->add_flag("--wall-clock", f.wall_clock,
                  "Record real timestamps instead of deterministic zeros");
}

void apply_flag_overrides(const RunFlags& f, json& cfg) {
    if (f.mode_opt->count() > 0) cfg["mode"] = f.mode;
    if (f.explore) cfg["mode"] = "full";
    if (f.max_rounds_opt->count() > 0) cfg["max_rounds"] = f.max_rounds;
    if (f.k_opt->count() > 0) cfg["k"] = f.k;
    if (f.k_doc_opt->count() > 0) cfg["k_doc"] = f.k_doc;
    if (f.n_opt->count() > 0) cfg["n"] = f.n;
    if (f.leaf_cap_opt->count() > 0) cfg["leaf_cap"] = f.leaf_cap;
    if (f.branch_depth_opt->count() > 0) cfg["branch_depth"] = f.branch_depth;
    if (f.max_new_tokens_opt->count() > 0) cfg["max_new_tokens"] = f.max_new_tokens;
    if (f.backend_opt->count() > 0) cfg["backend_url"] = f.backend_spec;
    if (f.timeout_opt->count() > 0) cfg["backend_timeout_ms"] = f.timeout_ms;
    if (f.retries_opt->count() > 0) cfg["backend_retries"] = f.retries;
    if (f.wall_clock) cfg["deterministic"] = false;
}

struct RunContext {
    json config;
    BackendHandle backend;
    IndexHandle index;
};

int prepare_run(const RunFlags& f, RunContext& ctx) {
    OwnedString raw;
    int rc = geek_config_resolve(f.config_file.empty() ? nullptr : f.config_file.c_str(),
                                 &raw.ptr);
    if (rc != GEEK_OK) return fail("resolving config", rc);
    ctx.config = json::parse(raw.str());
    apply_flag_overrides(f, ctx.config);
    std::string backend_spec = ctx.config.value("backend_url", std::string());
    if (backend_spec.empty()) {
        std::cerr << "error: no backend configured (pass --backend or set backend_url)\n";
        return 1;
    }
    ctx.backend.ptr = open_backend(backend_spec, ctx.config.value("backend_timeout_ms", 30000),
                                   ctx.config.value("backend_retries", 0));
    if (ctx.backend.ptr == nullptr) return fail("opening backend " + backend_spec);
    if (f.index_opt->count() > 0) {
        ctx.index.ptr = geek_index_load(f.index_path.c_str());
        if (ctx.index.ptr == nullptr) return fail("loading index " + f.index_path);
    }
    return 0;
}

int write_run_artifacts(const json& result, const std::string& trace_out) {
    if (trace_out.empty()) return 0;
    if (!write_file(trace_out, result.value("trace_jsonl", std::string())))
        return fail("writing trace " + trace_out);
    if (result.contains("tree")) {
        std::string tree_path = trace_out + ".tree.json";
        if (!write_file(tree_path, result["tree"].dump(2) + "\n"))
            return fail("writing tree summary " + tree_path);
        for (const json& leaf : result["leaves"]) {
            std::string leaf_path =
                trace_out + ".leaf" + std::to_string(leaf["lineage_id"].get<int>()) + ".jsonl";
            if (!write_file(leaf_path, leaf.value("trace_jsonl", std::string())))
                return fail("writing leaf trace " + leaf_path);
        }
    }
    return 0;
}

struct AskArgs {
    std::string question;
    std::string id = "cli";
    std::string trace_out;
    bool as_json = false;
};

int run_ask(const AskArgs& a, const RunFlags& f) {
    RunContext ctx;
    int rc = prepare_run(f, ctx);
    if (rc != 0) return rc;
    OwnedString out;
    rc = geek_solve(a.id.c_str(), a.question.c_str(), ctx.backend.ptr, ctx.index.ptr,
                    ctx.config.dump().c_str(), &out.ptr);
    if (rc != GEEK_OK) {
        std::string partial = geek_last_trace_jsonl();
        if (!a.trace_out.empty() && !partial.empty() && write_file(a.trace_out, partial))
            std::cerr << "partial trace written to " << a.trace_out << "\n";
        return fail("ask", rc);
    }
    json result = json::parse(out.str());
    rc = write_run_artifacts(result, a.trace_out);
    if (rc != 0) return rc;
    if (a.as_json) {
        std::cout << result.dump(2) << "\n";
    } else {
        std::cout << result["answer"].get<std::string>() << "\n";
        std::cerr << result["rationale"].get<std::string>() << "\n";
    }
    return 0;
}

struct ReplayArgs {
    std::string golden_path;
    std::string question;
    std::string id = "cli";
};

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

int run_replay(const ReplayArgs& a, const RunFlags& f) {
    std::string golden;
    if (!read_file(a.golden_path, golden)) return fail("reading golden trace " + a.golden_path);
    RunContext ctx;
    int rc = prepare_run(f, ctx);
    if (rc != 0) return rc;
    ctx.config["deterministic"] = true;
    OwnedString out;
    rc = geek_solve(a.id.c_str(), a.question.c_str(), ctx.backend.ptr, ctx.index.ptr,
                    ctx.config.dump().c_str(), &out.ptr);
    if (rc != GEEK_OK) return fail("replay run", rc);
    json result = json::parse(out.str());
    std::string actual = result.value("trace_jsonl", std::string());
    if (actual == golden) {
        std::cout << "replay: match (" << split_lines(actual).size() << " events)\n";
        return 0;
    }
    std::vector<std::string> want = split_lines(golden);
    std::vector<std::string> got = split_lines(actual);
    std::size_t limit = std::min(want.size(), got.size());
    std::size_t at = limit;
    for (std::size_t i = 0; i < limit; ++i) {
        if (want[i] != got[i]) {
            at = i;
            break;
        }
    }
    std::cout << "replay: mismatch at line " << (at + 1) << "\n";
    std::cout << "  golden: " << (at < want.size() ? want[at] : "<end of trace>") << "\n";
    std::cout << "  actual: " << (at < got.size() ? got[at] : "<end of trace>") << "\n";
    return 1;
}

int run_index_build(const std::string& corpus, const std::string& backend_spec,
                    const std::string& out_path, int timeout_ms, int retries) {
    BackendHandle backend{open_backend(backend_spec, timeout_ms, retries)};
    if (backend.ptr == nullptr) return fail("opening backend " + backend_spec);
    IndexHandle index{geek_index_build(corpus.c_str(), backend.ptr)};
    if (index.ptr == nullptr) return fail("building index from " + corpus);
    int rc = geek_index_save(index.ptr, out_path.c_str());
    if (rc != GEEK_OK) return fail("saving index " + out_path, rc);
    std::cout << "index written to " << out_path << "\n";
    return 0;
}

int run_index_query(const std::string& index_path, const std::string& backend_spec,
                    const std::string& query, int k, int k_doc, int timeout_ms, int retries) {
    IndexHandle index{geek_index_load(index_path.c_str())};
    if (index.ptr == nullptr) return fail("loading index " + index_path);
    BackendHandle backend{open_backend(backend_spec, timeout_ms, retries)};
    if (backend.ptr == nullptr) return fail("opening backend " + backend_spec);
    OwnedString out;
    int rc = geek_index_query(index.ptr, backend.ptr, query.c_str(), k, k_doc, &out.ptr);
    if (rc != GEEK_OK) return fail("query", rc);
    std::cout << json::parse(out.str()).dump(2) << "\n";
    return 0;
}

int run_prompt_list() {
    OwnedString out;
    int rc = geek_prompt_kinds(&out.ptr);
    if (rc != GEEK_OK) return fail("listing prompts", rc);
    for (const json& name : json::parse(out.str())) std::cout << name.get<std::string>() << "\n";
    return 0;
}

int run_prompt_show(const std::string& kind) {
    OwnedString out;
    int rc = geek_prompt_template(kind.c_str(), &out.ptr);
    if (rc != GEEK_OK) return fail("prompt " + kind, rc);
    std::cout << out.str();
    return 0;
}

int run_prompt_render(const std::string& kind, const std::string& question,
                      const std::vector<std::string>& slot_args) {
    json slots = json::object();
    for (const std::string& arg : slot_args) {
        std::size_t eq = arg.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: --slot expects name=value, got: " << arg << "\n";
            return 1;
        }
        slots[arg.substr(0, eq)] = arg.substr(eq + 1);
    }
    OwnedString out;
    int rc = geek_prompt_render(kind.c_str(), question.empty() ? nullptr : question.c_str(),
                                slots.dump().c_str(), &out.ptr);
    if (rc != GEEK_OK) return fail("rendering " + kind, rc);
    std::cout << out.str();
    return 0;
}

int run_data_load(const std::string& path) {
    OwnedString out;
    int rc = geek_data_load(path.c_str(), &out.ptr);
    if (rc != GEEK_OK) return fail("loading dataset " + path, rc);
    std::cout << json::parse(out.str()).dump(2) << "\n";
    return 0;
}

int run_data_refine(const std::string& path, const std::string& out_path, const RunFlags& f) {
    RunContext ctx;
    int rc = prepare_run(f, ctx);
    if (rc != 0) return rc;
    OwnedString out;
    rc = geek_data_refine(path.c_str(), ctx.backend.ptr, out_path.c_str(), &out.ptr);
    if (rc != GEEK_OK) return fail("refining " + path, rc);
    std::cout << json::parse(out.str()).dump(2) << "\n";
    return 0;
}

int run_data_pairs(const std::string& refined_path, const std::string& index_path,
                   const std::string& out_path) {
    IndexHandle index;
    if (!index_path.empty()) {
        index.ptr = geek_index_load(index_path.c_str());
        if (index.ptr == nullptr) return fail("loading index " + index_path);
    }
    OwnedString out;
    int rc = geek_data_pairs(refined_path.c_str(), index.ptr, out_path.c_str(), &out.ptr);
    if (rc != GEEK_OK) return fail("building pairs", rc);
    std::cout << json::parse(out.str()).dump(2) << "\n";
    return 0;
}

int run_data_score(const std::string& pred_path, const std::string& gold_path) {
    double accuracy = 0.0;
    int rc = geek_data_score(pred_path.c_str(), gold_path.c_str(), &accuracy);
    if (rc != GEEK_OK) return fail("scoring", rc);
    std::cout << std::fixed << std::setprecision(6) << accuracy << "\n";
    return 0;
}

int run_data_predict(const std::string& gold_path, const std::string& out_path,
                     const RunFlags& f) {
    RunContext ctx;
    int rc = prepare_run(f, ctx);
    if (rc != 0) return rc;
    OwnedString out;
    rc = geek_data_predict(gold_path.c_str(), ctx.backend.ptr, ctx.index.ptr,
                           ctx.config.dump().c_str(), out_path.c_str(), &out.ptr);
    if (rc != GEEK_OK) return fail("predicting", rc);
    std::cout << json::parse(out.str()).dump(2) << "\n";
    return 0;
}

int run_config_show(const std::string& config_file) {
    OwnedString out;
    int rc = geek_config_resolve(config_file.empty() ? nullptr : config_file.c_str(), &out.ptr);
    if (rc != GEEK_OK) return fail("resolving config", rc);
    std::cout << json::parse(out.str()).dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"geek: iterative question decomposition over a local corpus"};
    app.set_version_flag("--version", std::string(geek_version()));
    app.require_subcommand(1);
    int code = 0;

    AskArgs ask_args;
    RunFlags ask_flags;
    CLI::App* ask = app.add_subcommand("ask", "Answer a yes/no question");
    ask->add_option("--question", ask_args.question, "Question text")->required();
    ask->add_option("--id", ask_args.id, "Question id recorded in outputs");
    ask->add_option("--trace-out", ask_args.trace_out, "Write the run trace (JSONL) here");
    ask->add_flag("--json", ask_args.as_json, "Print the full result JSON instead of yes/no");
    add_run_flags(ask, ask_flags);
    ask->callback([&] { code = run_ask(ask_args, ask_flags); });

    ReplayArgs replay_args;
    RunFlags replay_flags;
    CLI::App* replay =
        app.add_subcommand("replay", "Re-run a question and diff against a golden trace");
    replay->add_option("--trace", replay_args.golden_path, "Golden trace (JSONL)")->required();
    replay->add_option("--question", replay_args.question, "Question text")->required();
    replay->add_option("--id", replay_args.id, "Question id recorded in outputs");
    add_run_flags(replay, replay_flags);
    replay->callback([&] { code = run_replay(replay_args, replay_flags); });

    CLI::App* index = app.add_subcommand("index", "Corpus index maintenance");
    index->require_subcommand(1);

    std::string ib_corpus, ib_backend, ib_out;
    int ib_timeout = 30000, ib_retries = 0;
    CLI::App* index_build = index->add_subcommand("build", "Embed a corpus into an index");
    index_build->add_option("--corpus", ib_corpus, "Corpus JSONL file")->required();
    index_build->add_option("--backend", ib_backend, "Embedding backend")->required();
    index_build->add_option("--out", ib_out, "Output index file")->required();
    index_build->add_option("--timeout-ms", ib_timeout, "HTTP backend timeout");
    index_build->add_option("--retries", ib_retries, "Extra HTTP attempts on connection failure");
    index_build->callback(
        [&] { code = run_index_build(ib_corpus, ib_backend, ib_out, ib_timeout, ib_retries); });

    std::string iq_index, iq_backend, iq_query;
    int iq_k = 10, iq_k_doc = 100, iq_timeout = 30000, iq_retries = 0;
    CLI::App* index_query = index->add_subcommand("query", "Search an index");
    index_query->add_option("--q", iq_query, "Query text")->required();
    index_query->add_option("--index", iq_index, "Index file")->required();
    index_query->add_option("--backend", iq_backend, "Embedding backend")->required();
    index_query->add_option("--k", iq_k, "Paragraphs to return");
    index_query->add_option("--k-doc", iq_k_doc, "Documents retained by stage one");
    index_query->add_option("--timeout-ms", iq_timeout, "HTTP backend timeout");
    index_query->add_option("--retries", iq_retries, "Extra HTTP attempts on connection failure");
    index_query->callback([&] {
        code = run_index_query(iq_index, iq_backend, iq_query, iq_k, iq_k_doc, iq_timeout,
                               iq_retries);
    });

    CLI::App* prompt = app.add_subcommand("prompt", "Inspect prompt templates");
    prompt->require_subcommand(1);

    CLI::App* prompt_list = prompt->add_subcommand("list", "List template kinds");
    prompt_list->callback([&] { code = run_prompt_list(); });

    std::string ps_kind;
    CLI::App* prompt_show = prompt->add_subcommand("show", "Print a raw template (exact bytes)");
    prompt_show->add_option("kind", ps_kind, "Template kind")->required();
    prompt_show->callback([&] { code = run_prompt_show(ps_kind); });

    std::string pr_kind, pr_question;
    std::vector<std::string> pr_slots;
    CLI::App* prompt_render =
        prompt->add_subcommand("render", "Print a rendered prompt (exact bytes)");
    prompt_render->add_option("kind", pr_kind, "Template kind")->required();
    prompt_render->add_option("--question", pr_question, "Fills {Q} and {Question_state}");
    prompt_render->add_option("--slot", pr_slots, "Placeholder value as name=value (repeatable)");
    prompt_render->callback([&] { code = run_prompt_render(pr_kind, pr_question, pr_slots); });

    CLI::App* data = app.add_subcommand("data", "Dataset tooling");
    data->require_subcommand(1);

    std::string dl_path;
    CLI::App* data_load = data->add_subcommand("load", "Validate a dataset file");
    data_load->add_option("path", dl_path, "Dataset JSON file")->required();
    data_load->callback([&] { code = run_data_load(dl_path); });

    std::string dr_path, dr_out;
    RunFlags dr_flags;
    CLI::App* data_refine =
        data->add_subcommand("refine", "Inline #i references via the refiner backend");
    data_refine->add_option("path", dr_path, "Dataset JSON file")->required();
    data_refine->add_option("--out", dr_out, "Refined JSONL output")->required();
    add_run_flags(data_refine, dr_flags);
    data_refine->callback([&] { code = run_data_refine(dr_path, dr_out, dr_flags); });

    std::string dp_path, dp_index, dp_out;
    CLI::App* data_pairs =
        data->add_subcommand("pairs", "Build per-timestep training pairs from refined items");
    data_pairs->add_option("path", dp_path, "Refined JSONL file")->required();
    data_pairs->add_option("--index", dp_index, "Corpus index supplying paragraph texts");
    data_pairs->add_option("--out", dp_out, "Training pairs JSONL output")->required();
    data_pairs->callback([&] { code = run_data_pairs(dp_path, dp_index, dp_out); });

    std::string ds_pred, ds_gold;
    CLI::App* data_score = data->add_subcommand("score", "Accuracy of predictions against gold");
    data_score->add_option("--pred", ds_pred, "Predictions JSON file")->required();
    data_score->add_option("--gold", ds_gold, "Gold dataset JSON file")->required();
    data_score->callback([&] { code = run_data_score(ds_pred, ds_gold); });

    std::string df_gold, df_out;
    RunFlags df_flags;
    CLI::App* data_predict =
        data->add_subcommand("predict-file", "Solve every gold item and write predictions");
    data_predict->add_option("--gold", df_gold, "Gold dataset JSON file")->required();
    data_predict->add_option("--out", df_out, "Predictions JSON output")->required();
    add_run_flags(data_predict, df_flags);
    data_predict->callback([&] { code = run_data_predict(df_gold, df_out, df_flags); });

    CLI::App* config = app.add_subcommand("config", "Configuration");
    config->require_subcommand(1);
    std::string cs_file;
    CLI::App* config_show = config->add_subcommand("show", "Print the resolved configuration");
    config_show->add_option("--config", cs_file, "Config file (JSON)");
    config_show->callback([&] { code = run_config_show(cs_file); });

    CLI11_PARSE(app, argc, argv);
    return code;
}
