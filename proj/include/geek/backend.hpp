#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "geek/errors.hpp"

namespace geek {

struct GenParams {
    int max_new_tokens = 256;
    int num_sequences = 1;
    bool deterministic = true;
};

struct Completion {
    std::string text;
    std::optional<double> score;

    bool operator==(const Completion&) const = default;
};

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

/// Inference provider: greedy generation, n-best generation, and embedding.
/// Implementations must be safe for concurrent calls.
class Backend {
public:
    virtual ~Backend() = default;

    /// Single completion; params.num_sequences must be 1.
    virtual Completion generate(const std::string& prompt, const GenParams& params) = 0;

    /// Up to params.num_sequences completions ordered by non-increasing score.
    /// Fewer are permitted when the provider cannot produce that many.
    virtual std::vector<Completion> generate_n(const std::string& prompt,
                                               const GenParams& params) = 0;

    /// One vector per input text, all sharing one dimension, order preserved.
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

inline void check_gen_args(const std::string& prompt, const GenParams& params,
                           bool single) {
    if (prompt.empty())
        raise(ErrorCode::InvalidArgument, "prompt must be non-empty");
    if (params.max_new_tokens < 1)
        raise(ErrorCode::InvalidArgument, "max_new_tokens must be >= 1");
    if (params.num_sequences < 1)
        raise(ErrorCode::InvalidArgument, "num_sequences must be >= 1");
    if (single && params.num_sequences != 1)
        raise(ErrorCode::InvalidArgument, "generate requires num_sequences == 1");
}

inline void check_embed_args(const std::vector<std::string>& texts) {
    if (texts.empty())
        raise(ErrorCode::InvalidArgument, "embed requires at least one text");
    for (const std::string& t : texts)
        if (t.empty())
            raise(ErrorCode::InvalidArgument, "embed texts must be non-empty");
}

inline void check_embedding_batch(const std::vector<EmbeddingVector>& vectors) {
    if (vectors.empty()) return;
    std::size_t dim = vectors.front().dim();
    for (const EmbeddingVector& v : vectors) {
        if (v.dim() != dim)
            raise(ErrorCode::DimensionMismatch,
                  "embedding dims differ: " + std::to_string(dim) + " vs " +
                      std::to_string(v.dim()));
        for (double x : v.values)
            if (!std::isfinite(x))
                raise(ErrorCode::Malformed, "embedding contains a non-finite value");
    }
}

/// Deterministic pseudorandom unit vector for a text, keyed by (seed, text).
/// Used by the scripted backend for texts absent from its embedding table.
EmbeddingVector seeded_unit_vector(const std::string& text, std::uint64_t seed,
                                   std::size_t dim);

} // namespace geek
