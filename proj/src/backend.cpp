#include "geek/backend.hpp"

#include <random>

namespace geek {

namespace {

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

EmbeddingVector seeded_unit_vector(const std::string& text, std::uint64_t seed,
                                   std::size_t dim) {
    if (dim == 0)
        raise(ErrorCode::InvalidArgument, "embedding dim must be positive");
    std::uint64_t h = fnv1a(text);
    h ^= seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    // mt19937_64 raw draws are fully specified by the standard, so vectors
    // are identical across platforms; distributions are not, so none are used.
    std::mt19937_64 rng(h);
    EmbeddingVector v;
    v.values.resize(dim);
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        double u = static_cast<double>(rng() >> 11) * 0x1.0p-53; // [0, 1)
        v.values[i] = 2.0 * u - 1.0;
        norm_sq += v.values[i] * v.values[i];
    }
    if (norm_sq == 0.0) {
        v.values[0] = 1.0;
        return v;
    }
    double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v.values) x *= inv;
    return v;
}

} // namespace geek
