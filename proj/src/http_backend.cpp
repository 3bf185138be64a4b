#include "geek/http_backend.hpp"

#include <algorithm>
#include <chrono>

#include <httplib.h>
#include <json.hpp>

namespace geek {

namespace {

using nlohmann::json;

json parse_body(const std::string& body) {
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        raise(ErrorCode::Malformed, "response is not valid JSON: " + std::string(e.what()));
    }
}

std::vector<Completion> decode_completions(const json& doc) {
    if (!doc.is_object() || !doc.contains("completions") || !doc["completions"].is_array())
        raise(ErrorCode::Malformed, "response missing 'completions' array");
    std::vector<Completion> out;
    for (const auto& item : doc["completions"]) {
        if (!item.is_object() || !item.contains("text") || !item["text"].is_string())
            raise(ErrorCode::Malformed, "completion entry missing 'text'");
        Completion c;
        c.text = item["text"].get<std::string>();
        if (item.contains("score") && !item["score"].is_null()) {
            if (!item["score"].is_number())
                raise(ErrorCode::Malformed, "completion 'score' must be a number");
            c.score = item["score"].get<double>();
        }
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace

HttpBackend::HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty())
        raise(ErrorCode::InvalidArgument, "backend URL must be non-empty");
    if (cfg_.timeout_ms < 1)
        raise(ErrorCode::InvalidArgument, "timeout must be positive");
    if (cfg_.retries < 0)
        raise(ErrorCode::InvalidArgument, "retries must be non-negative");
}

std::string HttpBackend::post_json(const std::string& path, const std::string& body) {
    httplib::Client client(cfg_.base_url);
    auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Result result;
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
        result = client.Post(path, body, "application/json");
        if (result) break;
    }
    if (!result)
        raise(ErrorCode::Transport, "cannot reach " + cfg_.base_url + path + ": " +
                                        httplib::to_string(result.error()));
    if (result->status != 200)
        raise(ErrorCode::Transport,
              "unexpected HTTP status " + std::to_string(result->status) + " from " + path);
    return result->body;
}

Completion HttpBackend::generate(const std::string& prompt, const GenParams& params) {
    check_gen_args(prompt, params, true);
    std::vector<Completion> batch = generate_n(prompt, params);
    if (batch.empty())
        raise(ErrorCode::Malformed, "server returned zero completions");
    return batch.front();
}

std::vector<Completion> HttpBackend::generate_n(const std::string& prompt,
                                                const GenParams& params) {
    check_gen_args(prompt, params, false);
    json request;
    request["prompt"] = prompt;
    request["max_new_tokens"] = params.max_new_tokens;
    request["num_sequences"] = params.num_sequences;
    request["deterministic"] = params.deterministic;

    std::vector<Completion> out = decode_completions(parse_body(post_json("/generate", request.dump())));
    if (out.size() > static_cast<std::size_t>(params.num_sequences))
        out.resize(static_cast<std::size_t>(params.num_sequences));
    bool all_scored = std::all_of(out.begin(), out.end(),
                                  [](const Completion& c) { return c.score.has_value(); });
    if (all_scored)
        std::stable_sort(out.begin(), out.end(), [](const Completion& a, const Completion& b) {
            return *a.score > *b.score;
        });
    return out;
}

std::vector<EmbeddingVector> HttpBackend::embed(const std::vector<std::string>& texts) {
    check_embed_args(texts);
    json request;
    request["texts"] = texts;

    json doc = parse_body(post_json("/embed", request.dump()));
    if (!doc.is_object() || !doc.contains("dim") || !doc.contains("vectors") ||
        !doc["dim"].is_number_integer() || !doc["vectors"].is_array())
        raise(ErrorCode::Malformed, "response missing 'dim' or 'vectors'");
    std::size_t dim = doc["dim"].get<std::size_t>();
    if (dim == 0)
        raise(ErrorCode::Malformed, "declared dim must be positive");
    if (doc["vectors"].size() != texts.size())
        raise(ErrorCode::Malformed, "expected " + std::to_string(texts.size()) +
                                        " vectors, got " + std::to_string(doc["vectors"].size()));

    std::vector<EmbeddingVector> out;
    for (const auto& row : doc["vectors"]) {
        if (!row.is_array())
            raise(ErrorCode::Malformed, "vector rows must be arrays");
        EmbeddingVector v;
        for (const auto& x : row) {
            if (!x.is_number())
                raise(ErrorCode::Malformed, "vector components must be numbers");
            v.values.push_back(x.get<double>());
        }
        if (v.dim() != dim)
            raise(ErrorCode::DimensionMismatch,
                  "vector has dim " + std::to_string(v.dim()) + ", declared " + std::to_string(dim));
        out.push_back(std::move(v));
    }
    check_embedding_batch(out);
    return out;
}

} // namespace geek
