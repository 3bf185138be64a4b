#include "geek/config.hpp"

#include <cstdlib>
#include <fstream>

namespace geek {

namespace {

int to_int(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        int value = std::stoi(text, &used);
        if (used != text.size())
            raise(ErrorCode::InvalidArgument, what + " must be an integer, got: " + text);
        return value;
    } catch (const std::logic_error&) {
        raise(ErrorCode::InvalidArgument, what + " must be an integer, got: " + text);
    }
}

bool to_bool(const std::string& text, const std::string& what) {
    if (text == "1" || text == "true" || text == "yes") return true;
    if (text == "0" || text == "false" || text == "no") return false;
    raise(ErrorCode::InvalidArgument, what + " must be a boolean, got: " + text);
}

const char* env(const char* name) { return std::getenv(name); }

} // namespace

nlohmann::ordered_json config_to_json(const AppConfig& cfg) {
    nlohmann::ordered_json doc;
    doc["mode"] = run_mode_name(cfg.mode);
    doc["max_rounds"] = cfg.max_rounds;
    doc["k"] = cfg.retrieval.k;
    doc["k_doc"] = cfg.retrieval.k_doc;
    doc["n"] = cfg.explore.n;
    doc["leaf_cap"] = cfg.explore.leaf_cap;
    doc["branch_depth"] = cfg.explore.branch_depth;
    doc["backend_url"] = cfg.backend.base_url;
    doc["backend_timeout_ms"] = cfg.backend.timeout_ms;
    doc["backend_retries"] = cfg.backend.retries;
    doc["max_new_tokens"] = cfg.max_new_tokens;
    doc["deterministic"] = cfg.deterministic;
    return doc;
}

void apply_config_json(AppConfig& cfg, const nlohmann::json& doc) {
    if (!doc.is_object())
        raise(ErrorCode::SchemaViolation, "config must be a JSON object");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string& key = it.key();
        const auto& value = it.value();
        if (key == "mode")
            cfg.mode = run_mode_from_string(value.get<std::string>());
        else if (key == "max_rounds")
            cfg.max_rounds = value.get<int>();
        else if (key == "k")
            cfg.retrieval.k = value.get<int>();
        else if (key == "k_doc")
            cfg.retrieval.k_doc = value.get<int>();
        else if (key == "n")
            cfg.explore.n = value.get<int>();
        else if (key == "leaf_cap")
            cfg.explore.leaf_cap = value.get<int>();
        else if (key == "branch_depth")
            cfg.explore.branch_depth = value.get<int>();
        else if (key == "backend_url")
            cfg.backend.base_url = value.get<std::string>();
        else if (key == "backend_timeout_ms")
            cfg.backend.timeout_ms = value.get<int>();
        else if (key == "backend_retries")
            cfg.backend.retries = value.get<int>();
        else if (key == "max_new_tokens")
            cfg.max_new_tokens = value.get<int>();
        else if (key == "deterministic")
            cfg.deterministic = value.get<bool>();
        else
            raise(ErrorCode::SchemaViolation, "unknown config key: " + key);
    }
}

void apply_config_file(AppConfig& cfg, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::FileMissing, "cannot open config file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::SchemaViolation,
              "config file is not valid JSON: " + std::string(e.what()));
    }
    apply_config_json(cfg, doc);
}

void apply_env_overrides(AppConfig& cfg) {
    if (const char* v = env("GEEK_MODE")) cfg.mode = run_mode_from_string(v);
    if (const char* v = env("GEEK_MAX_ROUNDS")) cfg.max_rounds = to_int(v, "GEEK_MAX_ROUNDS");
    if (const char* v = env("GEEK_K")) cfg.retrieval.k = to_int(v, "GEEK_K");
    if (const char* v = env("GEEK_K_DOC")) cfg.retrieval.k_doc = to_int(v, "GEEK_K_DOC");
    if (const char* v = env("GEEK_EXPLORE_N")) cfg.explore.n = to_int(v, "GEEK_EXPLORE_N");
    if (const char* v = env("GEEK_LEAF_CAP")) cfg.explore.leaf_cap = to_int(v, "GEEK_LEAF_CAP");
    if (const char* v = env("GEEK_BRANCH_DEPTH"))
        cfg.explore.branch_depth = to_int(v, "GEEK_BRANCH_DEPTH");
    if (const char* v = env("GEEK_BACKEND_URL")) cfg.backend.base_url = v;
    if (const char* v = env("GEEK_BACKEND_TIMEOUT_MS"))
        cfg.backend.timeout_ms = to_int(v, "GEEK_BACKEND_TIMEOUT_MS");
    if (const char* v = env("GEEK_BACKEND_RETRIES"))
        cfg.backend.retries = to_int(v, "GEEK_BACKEND_RETRIES");
    if (const char* v = env("GEEK_MAX_NEW_TOKENS"))
        cfg.max_new_tokens = to_int(v, "GEEK_MAX_NEW_TOKENS");
    if (const char* v = env("GEEK_DETERMINISTIC"))
        cfg.deterministic = to_bool(v, "GEEK_DETERMINISTIC");
}

AppConfig resolve_config(const std::string* file_path) {
    AppConfig cfg;
    if (file_path != nullptr) apply_config_file(cfg, *file_path);
    apply_env_overrides(cfg);
    return cfg;
}

EngineConfig engine_config(const AppConfig& cfg) {
    EngineConfig out;
    out.max_rounds = cfg.max_rounds;
    out.retrieval = cfg.retrieval;
    out.mode = cfg.mode;
    out.gen.max_new_tokens = cfg.max_new_tokens;
    out.gen.deterministic = cfg.deterministic;
    return out;
}

} // namespace geek
