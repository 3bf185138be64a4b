#pragma once

#include <string>

#include <json.hpp>

#include "geek/engine.hpp"
#include "geek/explorer.hpp"
#include "geek/http_backend.hpp"

namespace geek {

/// Everything the CLI and C API need to run: engine, exploration, and
/// backend settings. Resolution order: built-in defaults, then the config
/// file, then GEEK_* environment variables; command-line flags are applied
/// on top by the caller.
struct AppConfig {
    RunMode mode = RunMode::DeRE;
    int max_rounds = 8;
    RetrievalConfig retrieval;
    ExploreConfig explore;
    HttpBackendConfig backend;
    int max_new_tokens = 256;
    bool deterministic = true;
};

nlohmann::ordered_json config_to_json(const AppConfig& cfg);

/// Applies the keys present in doc over cfg; unknown keys are rejected.
void apply_config_json(AppConfig& cfg, const nlohmann::json& doc);

void apply_config_file(AppConfig& cfg, const std::string& path);

/// GEEK_MODE, GEEK_MAX_ROUNDS, GEEK_K, GEEK_K_DOC, GEEK_EXPLORE_N,
/// GEEK_LEAF_CAP, GEEK_BRANCH_DEPTH, GEEK_BACKEND_URL,
/// GEEK_BACKEND_TIMEOUT_MS, GEEK_BACKEND_RETRIES, GEEK_MAX_NEW_TOKENS,
/// GEEK_DETERMINISTIC.
void apply_env_overrides(AppConfig& cfg);

/// defaults -> optional file -> environment.
AppConfig resolve_config(const std::string* file_path);

EngineConfig engine_config(const AppConfig& cfg);

} // namespace geek
