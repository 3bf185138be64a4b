#pragma once

#include <string>

#include "geek/backend.hpp"

namespace geek {

struct HttpBackendConfig {
    std::string base_url;
    int timeout_ms = 30000;
    int retries = 0;
};

/// Client for the minimal two-endpoint inference protocol:
///   POST /generate  {prompt, max_new_tokens, num_sequences, deterministic}
///                -> {completions: [{text, score?}, ...]}
///   POST /embed     {texts: [...]}
///                -> {dim, vectors: [[...], ...]}
/// Connection failures are retried up to `retries` extra attempts; decode
/// and schema problems are not.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig cfg);

    Completion generate(const std::string& prompt, const GenParams& params) override;
    std::vector<Completion> generate_n(const std::string& prompt,
                                       const GenParams& params) override;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

private:
    std::string post_json(const std::string& path, const std::string& body);

    HttpBackendConfig cfg_;
};

} // namespace geek
