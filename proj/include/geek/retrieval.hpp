#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "geek/backend.hpp"

namespace geek {

struct Paragraph {
    std::string para_id;
    std::string doc_id;
    std::string text;
};

struct CorpusDoc {
    std::string doc_id;
    std::string title;
    std::vector<Paragraph> paragraphs;
};

enum class IndexLevel { Document, Paragraph };

struct IndexEntry {
    std::string id;
    std::string parent; // owning doc_id for paragraph entries, empty for documents
    EmbeddingVector vec;
};

struct DenseIndex {
    IndexLevel level = IndexLevel::Document;
    std::size_t dim = 0;
    std::vector<IndexEntry> entries;
};

struct RetrievalHit {
    std::string para_id;
    std::string doc_id;
    double score = 0.0;

    bool operator==(const RetrievalHit&) const = default;
};

struct RetrievalConfig {
    int k_doc = 100;
    int k = 10;
};

/// Both dense indexes over one corpus plus paragraph texts for the reader.
struct CorpusIndex {
    DenseIndex doc_index;
    DenseIndex para_index;
    std::map<std::string, std::string> para_texts;
};

/// Key text the document-level index embeds: title, newline, first paragraph.
std::string doc_key_text(const CorpusDoc& doc);

/// One JSON object per line: {doc_id, title, paragraphs: [...]} where each
/// paragraph is either a bare string (para_id assigned as doc_id#ordinal,
/// 1-based) or an object {para_id, text}.
std::vector<CorpusDoc> parse_corpus_jsonl(const std::string& text);
std::vector<CorpusDoc> load_corpus_jsonl(const std::string& path);

/// Throws CorpusInvalid on duplicate ids, empty docs, or empty texts.
void validate_corpus(const std::vector<CorpusDoc>& corpus);

CorpusIndex build_corpus_index(const std::vector<CorpusDoc>& corpus, Backend& embedder);

void save_corpus_index(const CorpusIndex& index, const std::string& path);
CorpusIndex load_corpus_index(const std::string& path);

/// Exhaustive inner-product scoring; exact top-min(k, n) entries ordered by
/// (score descending, id ascending).
std::vector<std::pair<std::string, double>> brute_force_topk(
    const EmbeddingVector& query_vec, const std::vector<IndexEntry>& entries, int k);

/// Two-stage search: rank documents by inner product with the query, keep the
/// top k_doc, then rank only paragraphs of retained documents and return the
/// top k hits.
std::vector<RetrievalHit> retrieve(const std::string& query, const CorpusIndex& index,
                                   Backend& embedder, const RetrievalConfig& cfg);

double inner_product(const EmbeddingVector& a, const EmbeddingVector& b);

} // namespace geek
