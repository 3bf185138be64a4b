#include <doctest.h>

#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geek/config.hpp"
#include "support.hpp"

using geek::AppConfig;
using geek::ErrorCode;

namespace {

const std::vector<std::string> kConfigVars = {
    "GEEK_MODE",           "GEEK_MAX_ROUNDS",         "GEEK_K",
    "GEEK_K_DOC",          "GEEK_EXPLORE_N",          "GEEK_LEAF_CAP",
    "GEEK_BRANCH_DEPTH",   "GEEK_BACKEND_URL",        "GEEK_BACKEND_TIMEOUT_MS",
    "GEEK_BACKEND_RETRIES", "GEEK_MAX_NEW_TOKENS",    "GEEK_DETERMINISTIC",
};

/// Clears every GEEK_* config variable for the scope and restores the
/// previous values afterwards.
class EnvGuard {
public:
    EnvGuard() {
        for (const std::string& name : kConfigVars) {
            const char* value = std::getenv(name.c_str());
            saved_[name] = value ? std::optional<std::string>(value) : std::nullopt;
            unsetenv(name.c_str());
        }
    }
    ~EnvGuard() {
        for (const auto& [name, value] : saved_) {
            if (value)
                setenv(name.c_str(), value->c_str(), 1);
            else
                unsetenv(name.c_str());
        }
    }
    EnvGuard(const EnvGuard&) = delete;
    EnvGuard& operator=(const EnvGuard&) = delete;

private:
    std::map<std::string, std::optional<std::string>> saved_;
};

ErrorCode thrown_code(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const geek::Error& e) {
        return e.code();
    }
    return ErrorCode::Internal;
}

} // namespace

TEST_CASE("default config serializes with every knob in declaration order") {
    AppConfig cfg;
    CHECK(geek::config_to_json(cfg).dump() ==
          R"({"mode":"dere","max_rounds":8,"k":10,"k_doc":100,"n":4,"leaf_cap":16,)"
          R"("branch_depth":2,"backend_url":"","backend_timeout_ms":30000,)"
          R"("backend_retries":0,"max_new_tokens":256,"deterministic":true})");
}

TEST_CASE("apply_config_json sets every recognized key") {
    AppConfig cfg;
    geek::apply_config_json(cfg, nlohmann::json::parse(R"({
        "mode": "full",
        "max_rounds": 3,
        "k": 5,
        "k_doc": 40,
        "n": 2,
        "leaf_cap": 9,
        "branch_depth": 1,
        "backend_url": "http://127.0.0.1:8123",
        "backend_timeout_ms": 1500,
        "backend_retries": 4,
        "max_new_tokens": 64,
        "deterministic": false
    })"));
    CHECK(cfg.mode == geek::RunMode::Full);
    CHECK(cfg.max_rounds == 3);
    CHECK(cfg.retrieval.k == 5);
    CHECK(cfg.retrieval.k_doc == 40);
    CHECK(cfg.explore.n == 2);
    CHECK(cfg.explore.leaf_cap == 9);
    CHECK(cfg.explore.branch_depth == 1);
    CHECK(cfg.backend.base_url == "http://127.0.0.1:8123");
    CHECK(cfg.backend.timeout_ms == 1500);
    CHECK(cfg.backend.retries == 4);
    CHECK(cfg.max_new_tokens == 64);
    CHECK(cfg.deterministic == false);
}

TEST_CASE("apply_config_json leaves absent keys at their prior values") {
    AppConfig cfg;
    cfg.max_rounds = 12;
    geek::apply_config_json(cfg, nlohmann::json::parse(R"({"k": 3})"));
    CHECK(cfg.retrieval.k == 3);
    CHECK(cfg.max_rounds == 12);
    CHECK(cfg.mode == geek::RunMode::DeRE);
}

TEST_CASE("apply_config_json rejects unknown keys and non-objects") {
    AppConfig cfg;
    ErrorCode code = thrown_code(
        [&] { geek::apply_config_json(cfg, nlohmann::json::parse(R"({"topk": 5})")); });
    CHECK(code == ErrorCode::SchemaViolation);
    try {
        geek::apply_config_json(cfg, nlohmann::json::parse(R"({"topk": 5})"));
        FAIL("expected SchemaViolation");
    } catch (const geek::Error& e) {
        CHECK(std::string(e.what()).find("topk") != std::string::npos);
    }
    CHECK(thrown_code([&] { geek::apply_config_json(cfg, nlohmann::json::parse("[1]")); }) ==
          ErrorCode::SchemaViolation);
    CHECK(thrown_code([&] {
              geek::apply_config_json(cfg, nlohmann::json::parse(R"({"mode": "ensemble"})"));
          }) == ErrorCode::InvalidArgument);
}

TEST_CASE("apply_config_file reads JSON and reports missing or broken files") {
    support::TempDir dir;
    support::write_file(dir.file("cfg.json"), R"({"mode": "cot", "max_rounds": 2})");
    AppConfig cfg;
    geek::apply_config_file(cfg, dir.file("cfg.json"));
    CHECK(cfg.mode == geek::RunMode::CoT);
    CHECK(cfg.max_rounds == 2);

    CHECK(thrown_code([&] { geek::apply_config_file(cfg, dir.file("absent.json")); }) ==
          ErrorCode::FileMissing);
    support::write_file(dir.file("broken.json"), "{not json");
    CHECK(thrown_code([&] { geek::apply_config_file(cfg, dir.file("broken.json")); }) ==
          ErrorCode::SchemaViolation);
}

TEST_CASE("environment variables override defaults and files") {
    EnvGuard guard;

    SUBCASE("every variable lands on its field") {
        setenv("GEEK_MODE", "de", 1);
        setenv("GEEK_MAX_ROUNDS", "5", 1);
        setenv("GEEK_K", "7", 1);
        setenv("GEEK_K_DOC", "70", 1);
        setenv("GEEK_EXPLORE_N", "3", 1);
        setenv("GEEK_LEAF_CAP", "11", 1);
        setenv("GEEK_BRANCH_DEPTH", "1", 1);
        setenv("GEEK_BACKEND_URL", "http://localhost:9000", 1);
        setenv("GEEK_BACKEND_TIMEOUT_MS", "2500", 1);
        setenv("GEEK_BACKEND_RETRIES", "2", 1);
        setenv("GEEK_MAX_NEW_TOKENS", "128", 1);
        setenv("GEEK_DETERMINISTIC", "false", 1);

        AppConfig cfg;
        geek::apply_env_overrides(cfg);
        CHECK(cfg.mode == geek::RunMode::De);
        CHECK(cfg.max_rounds == 5);
        CHECK(cfg.retrieval.k == 7);
        CHECK(cfg.retrieval.k_doc == 70);
        CHECK(cfg.explore.n == 3);
        CHECK(cfg.explore.leaf_cap == 11);
        CHECK(cfg.explore.branch_depth == 1);
        CHECK(cfg.backend.base_url == "http://localhost:9000");
        CHECK(cfg.backend.timeout_ms == 2500);
        CHECK(cfg.backend.retries == 2);
        CHECK(cfg.max_new_tokens == 128);
        CHECK(cfg.deterministic == false);
    }

    SUBCASE("boolean spellings") {
        AppConfig cfg;
        for (const char* truthy : {"1", "true", "yes"}) {
            cfg.deterministic = false;
            setenv("GEEK_DETERMINISTIC", truthy, 1);
            geek::apply_env_overrides(cfg);
            CHECK(cfg.deterministic == true);
        }
        for (const char* falsy : {"0", "false", "no"}) {
            cfg.deterministic = true;
            setenv("GEEK_DETERMINISTIC", falsy, 1);
            geek::apply_env_overrides(cfg);
            CHECK(cfg.deterministic == false);
        }
    }

    SUBCASE("malformed values raise InvalidArgument") {
        AppConfig cfg;
        setenv("GEEK_MAX_ROUNDS", "eight", 1);
        CHECK(thrown_code([&] { geek::apply_env_overrides(cfg); }) ==
              ErrorCode::InvalidArgument);
        unsetenv("GEEK_MAX_ROUNDS");
        setenv("GEEK_K", "7x", 1);
        CHECK(thrown_code([&] { geek::apply_env_overrides(cfg); }) ==
              ErrorCode::InvalidArgument);
        unsetenv("GEEK_K");
        setenv("GEEK_DETERMINISTIC", "maybe", 1);
        CHECK(thrown_code([&] { geek::apply_env_overrides(cfg); }) ==
              ErrorCode::InvalidArgument);
    }
}

TEST_CASE("resolve_config layers defaults, file, then environment") {
    EnvGuard guard;
    support::TempDir dir;
    support::write_file(dir.file("cfg.json"), R"({"k": 3, "max_rounds": 4, "mode": "de"})");
    std::string path = dir.file("cfg.json");

    SUBCASE("no file, no env: defaults") {
        AppConfig cfg = geek::resolve_config(nullptr);
        CHECK(geek::config_to_json(cfg) == geek::config_to_json(AppConfig{}));
    }

    SUBCASE("file overrides defaults") {
        AppConfig cfg = geek::resolve_config(&path);
        CHECK(cfg.retrieval.k == 3);
        CHECK(cfg.max_rounds == 4);
        CHECK(cfg.mode == geek::RunMode::De);
        CHECK(cfg.retrieval.k_doc == 100);
    }

    SUBCASE("environment wins over the file") {
        setenv("GEEK_K", "9", 1);
        setenv("GEEK_MODE", "full", 1);
        AppConfig cfg = geek::resolve_config(&path);
        CHECK(cfg.retrieval.k == 9);
        CHECK(cfg.mode == geek::RunMode::Full);
        CHECK(cfg.max_rounds == 4);
    }
}

TEST_CASE("engine_config copies the engine-facing fields") {
    AppConfig cfg;
    cfg.mode = geek::RunMode::CoT;
    cfg.max_rounds = 6;
    cfg.retrieval.k = 2;
    cfg.retrieval.k_doc = 30;
    cfg.max_new_tokens = 99;
    cfg.deterministic = false;

    geek::EngineConfig engine = geek::engine_config(cfg);
    CHECK(engine.mode == geek::RunMode::CoT);
    CHECK(engine.max_rounds == 6);
    CHECK(engine.retrieval.k == 2);
    CHECK(engine.retrieval.k_doc == 30);
    CHECK(engine.gen.max_new_tokens == 99);
    CHECK(engine.gen.deterministic == false);
}
