#include "geek/scripted_backend.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace geek {

namespace {

std::string snippet(const std::string& s, std::size_t from, std::size_t n = 48) {
    std::string printable;
    for (char c : s.substr(from, n)) {
        if (c == '\n')
            printable += "\\n";
        else
            printable += c;
    }
    return printable;
}

} // namespace

std::string ScriptedBackend::normalize_prompt(const std::string& prompt) {
    std::string out;
    out.reserve(prompt.size());
    for (std::size_t i = 0; i < prompt.size(); ++i) {
        if (prompt[i] == '\r' && i + 1 < prompt.size() && prompt[i + 1] == '\n') continue;
        out.push_back(prompt[i]);
    }
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back())))
        out.pop_back();
    return out;
}

ScriptedBackend::ScriptedBackend(const nlohmann::json& manifest) {
    if (!manifest.is_object())
        raise(ErrorCode::Malformed, "script manifest must be a JSON object");

    if (manifest.contains("responses")) {
        const auto& list = manifest["responses"];
        if (!list.is_array())
            raise(ErrorCode::Malformed, "script manifest 'responses' must be an array");
        for (const auto& item : list) {
            if (!item.is_object() || !item.contains("prompt") || !item.contains("responses") ||
                !item["prompt"].is_string() || !item["responses"].is_array())
                raise(ErrorCode::Malformed,
                      "script entry must be {prompt: string, responses: [string, ...]}");
            Entry entry;
            for (const auto& r : item["responses"]) {
                if (!r.is_string())
                    raise(ErrorCode::Malformed, "script responses must be strings");
                entry.responses.push_back(r.get<std::string>());
            }
            if (entry.responses.empty())
                raise(ErrorCode::Malformed, "script entry needs at least one response");
            entries_[normalize_prompt(item["prompt"].get<std::string>())] = std::move(entry);
        }
    }

    if (manifest.contains("embedding_seed"))
        embedding_seed_ = manifest["embedding_seed"].get<std::uint64_t>();
    if (manifest.contains("embedding_dim"))
        embedding_dim_ = manifest["embedding_dim"].get<std::size_t>();
    if (embedding_dim_ == 0)
        raise(ErrorCode::Malformed, "embedding_dim must be positive");

    if (manifest.contains("embeddings")) {
        const auto& table = manifest["embeddings"];
        if (!table.is_object())
            raise(ErrorCode::Malformed, "script manifest 'embeddings' must be an object");
        bool dim_given = manifest.contains("embedding_dim");
        for (auto it = table.begin(); it != table.end(); ++it) {
            if (!it.value().is_array())
                raise(ErrorCode::Malformed, "embedding table values must be arrays");
            EmbeddingVector v;
            for (const auto& x : it.value()) v.values.push_back(x.get<double>());
            if (v.values.empty())
                raise(ErrorCode::Malformed, "embedding vector must be non-empty");
            if (!dim_given && embedding_table_.empty()) embedding_dim_ = v.dim();
            if (v.dim() != embedding_dim_)
                raise(ErrorCode::Malformed,
                      "embedding for \"" + it.key() + "\" has dim " + std::to_string(v.dim()) +
                          ", expected " + std::to_string(embedding_dim_));
            embedding_table_[it.key()] = std::move(v);
        }
    }
}

nlohmann::json ScriptedBackend::load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::FileMissing, "cannot open script manifest: " + path);
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::Malformed, "script manifest is not valid JSON: " + std::string(e.what()));
    }
    return manifest;
}

ScriptedBackend::Entry& ScriptedBackend::find_entry(const std::string& prompt) {
    auto it = entries_.find(prompt);
    if (it != entries_.end()) return it->second;

    std::size_t best_len = 0;
    const std::string* best_key = nullptr;
    for (const auto& [key, entry] : entries_) {
        std::size_t n = 0;
        std::size_t limit = std::min(key.size(), prompt.size());
        while (n < limit && key[n] == prompt[n]) ++n;
        if (best_key == nullptr || n > best_len) {
            best_len = n;
            best_key = &key;
        }
    }
    std::ostringstream msg;
    msg << "no scripted response for prompt (" << prompt.size() << " chars)";
    if (best_key == nullptr) {
        msg << "; script has no entries";
    } else {
        msg << "; longest scripted prefix match is " << best_len << " chars";
        std::size_t tail = best_len > 24 ? best_len - 24 : 0;
        msg << ", \"..." << snippet(prompt, tail, best_len - tail) << "\"";
        msg << " then script has \"" << snippet(*best_key, best_len) << "\"";
        msg << " but prompt has \"" << snippet(prompt, best_len) << "\"";
    }
    raise(ErrorCode::ScriptMiss, msg.str());
}

Completion ScriptedBackend::generate(const std::string& prompt, const GenParams& params) {
    check_gen_args(prompt, params, true);
    std::lock_guard<std::mutex> lock(mutex_);
    Entry& entry = find_entry(normalize_prompt(prompt));
    Completion c;
    c.text = entry.responses[entry.cursor];
    c.score = 0.0;
    if (entry.cursor + 1 < entry.responses.size()) ++entry.cursor;
    return c;
}

std::vector<Completion> ScriptedBackend::generate_n(const std::string& prompt,
                                                    const GenParams& params) {
    check_gen_args(prompt, params, false);
    std::lock_guard<std::mutex> lock(mutex_);
    Entry& entry = find_entry(normalize_prompt(prompt));
    std::size_t want = static_cast<std::size_t>(params.num_sequences);
    std::size_t upto = std::min(entry.cursor + want, entry.responses.size());
    std::vector<Completion> out;
    for (std::size_t i = entry.cursor; i < upto; ++i) {
        Completion c;
        c.text = entry.responses[i];
        c.score = -static_cast<double>(i - entry.cursor);
        out.push_back(std::move(c));
    }
    entry.cursor = std::min(upto, entry.responses.size() - 1);
    return out;
}

std::vector<EmbeddingVector> ScriptedBackend::embed(const std::vector<std::string>& texts) {
    check_embed_args(texts);
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const std::string& text : texts) {
        auto it = embedding_table_.find(text);
        if (it != embedding_table_.end())
            out.push_back(it->second);
        else
            out.push_back(seeded_unit_vector(text, embedding_seed_, embedding_dim_));
    }
    check_embedding_batch(out);
    return out;
}

} // namespace geek
