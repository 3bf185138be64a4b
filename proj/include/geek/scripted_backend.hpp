#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "geek/backend.hpp"

namespace geek {

/// Deterministic backend driven by a manifest of (prompt, [responses...])
/// entries plus an embedding table. Responses for a prompt are consumed in
/// order; after the last one it keeps answering with the last response, so
/// scripts stay small when a prompt repeats. Unknown prompts raise
/// ScriptMiss naming the longest matching scripted prefix. Texts absent
/// from the embedding table get a seeded pseudorandom unit vector.
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(const nlohmann::json& manifest);

    /// Reads a manifest file for the constructor.
    static nlohmann::json load_manifest(const std::string& path);

    Completion generate(const std::string& prompt, const GenParams& params) override;
    std::vector<Completion> generate_n(const std::string& prompt,
                                       const GenParams& params) override;
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

    std::size_t embedding_dim() const { return embedding_dim_; }

    /// Prompt normalization applied before script lookup: CRLF to LF, then
    /// trailing whitespace stripped.
    static std::string normalize_prompt(const std::string& prompt);

private:
    struct Entry {
        std::vector<std::string> responses;
        std::size_t cursor = 0;
    };

    Entry& find_entry(const std::string& prompt);

    std::mutex mutex_;
    std::map<std::string, Entry> entries_;
    std::map<std::string, EmbeddingVector> embedding_table_;
    std::size_t embedding_dim_ = 16;
    std::uint64_t embedding_seed_ = 0;
};

} // namespace geek
