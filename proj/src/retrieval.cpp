#include "geek/retrieval.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace geek {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json parse_json_line(const std::string& line, std::size_t line_no) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        raise(ErrorCode::CorpusInvalid,
              "corpus line " + std::to_string(line_no) + " is not valid JSON: " + e.what());
    }
}

} // namespace

double inner_product(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim())
        raise(ErrorCode::DimensionMismatch, "inner product dims differ: " +
                                                std::to_string(a.dim()) + " vs " +
                                                std::to_string(b.dim()));
    double sum = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) sum += a.values[i] * b.values[i];
    return sum;
}

std::string doc_key_text(const CorpusDoc& doc) {
    return doc.title + "\n" + doc.paragraphs.front().text;
}

std::vector<CorpusDoc> parse_corpus_jsonl(const std::string& text) {
    std::vector<CorpusDoc> corpus;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        json obj = parse_json_line(line, line_no);
        if (!obj.is_object() || !obj.contains("doc_id") || !obj.contains("title") ||
            !obj.contains("paragraphs") || !obj["paragraphs"].is_array())
            raise(ErrorCode::CorpusInvalid, "corpus line " + std::to_string(line_no) +
                                                " must be {doc_id, title, paragraphs:[...]}");
        CorpusDoc doc;
        doc.doc_id = obj["doc_id"].get<std::string>();
        doc.title = obj["title"].get<std::string>();
        std::size_t ordinal = 0;
        for (const auto& p : obj["paragraphs"]) {
            ++ordinal;
            Paragraph para;
            para.doc_id = doc.doc_id;
            if (p.is_string()) {
                para.para_id = doc.doc_id + "#" + std::to_string(ordinal);
                para.text = p.get<std::string>();
            } else if (p.is_object() && p.contains("text")) {
                para.text = p["text"].get<std::string>();
                para.para_id = p.contains("para_id") ? p["para_id"].get<std::string>()
                                                     : doc.doc_id + "#" + std::to_string(ordinal);
            } else {
                raise(ErrorCode::CorpusInvalid,
                      "corpus line " + std::to_string(line_no) +
                          ": paragraphs must be strings or {para_id, text} objects");
            }
            doc.paragraphs.push_back(std::move(para));
        }
        corpus.push_back(std::move(doc));
    }
    validate_corpus(corpus);
    return corpus;
}

std::vector<CorpusDoc> load_corpus_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::FileMissing, "cannot open corpus file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_corpus_jsonl(buffer.str());
}

void validate_corpus(const std::vector<CorpusDoc>& corpus) {
    std::set<std::string> doc_ids;
    std::set<std::string> para_ids;
    for (const CorpusDoc& doc : corpus) {
        if (doc.doc_id.empty())
            raise(ErrorCode::CorpusInvalid, "document with empty doc_id");
        if (!doc_ids.insert(doc.doc_id).second)
            raise(ErrorCode::CorpusInvalid, "duplicate doc_id: " + doc.doc_id);
        if (doc.paragraphs.empty())
            raise(ErrorCode::CorpusInvalid, "document " + doc.doc_id + " has no paragraphs");
        for (const Paragraph& para : doc.paragraphs) {
            if (para.doc_id != doc.doc_id)
                raise(ErrorCode::CorpusInvalid,
                      "paragraph " + para.para_id + " does not reference its document");
            if (para.text.empty())
                raise(ErrorCode::CorpusInvalid, "paragraph " + para.para_id + " has empty text");
            if (!para_ids.insert(para.para_id).second)
                raise(ErrorCode::CorpusInvalid, "duplicate para_id: " + para.para_id);
        }
    }
}

CorpusIndex build_corpus_index(const std::vector<CorpusDoc>& corpus, Backend& embedder) {
    if (corpus.empty())
        raise(ErrorCode::CorpusInvalid, "corpus must be non-empty");
    validate_corpus(corpus);

    std::vector<std::string> doc_keys;
    for (const CorpusDoc& doc : corpus) doc_keys.push_back(doc_key_text(doc));
    std::vector<std::string> para_texts;
    for (const CorpusDoc& doc : corpus)
        for (const Paragraph& para : doc.paragraphs) para_texts.push_back(para.text);

    std::vector<EmbeddingVector> doc_vecs = embedder.embed(doc_keys);
    std::vector<EmbeddingVector> para_vecs = embedder.embed(para_texts);
    if (doc_vecs.size() != corpus.size() || para_vecs.size() != para_texts.size())
        raise(ErrorCode::EmbedFailure, "embedder returned the wrong number of vectors");
    if (doc_vecs.front().dim() != para_vecs.front().dim())
        raise(ErrorCode::DimensionMismatch, "document and paragraph embedding dims differ");

    CorpusIndex index;
    index.doc_index.level = IndexLevel::Document;
    index.doc_index.dim = doc_vecs.front().dim();
    index.para_index.level = IndexLevel::Paragraph;
    index.para_index.dim = index.doc_index.dim;

    std::size_t next_para = 0;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        index.doc_index.entries.push_back({corpus[d].doc_id, "", doc_vecs[d]});
        for (const Paragraph& para : corpus[d].paragraphs) {
            index.para_index.entries.push_back({para.para_id, para.doc_id, para_vecs[next_para]});
            index.para_texts[para.para_id] = para.text;
            ++next_para;
        }
    }
    return index;
}

void save_corpus_index(const CorpusIndex& index, const std::string& path) {
    ordered_json doc;
    doc["format"] = "geek-index";
    doc["version"] = 1;
    doc["dim"] = index.doc_index.dim;
    doc["docs"] = ordered_json::array();
    for (const IndexEntry& e : index.doc_index.entries) {
        ordered_json row;
        row["id"] = e.id;
        row["vec"] = e.vec.values;
        doc["docs"].push_back(std::move(row));
    }
    doc["paras"] = ordered_json::array();
    for (const IndexEntry& e : index.para_index.entries) {
        ordered_json row;
        row["id"] = e.id;
        row["parent"] = e.parent;
        row["text"] = index.para_texts.count(e.id) ? index.para_texts.at(e.id) : "";
        row["vec"] = e.vec.values;
        doc["paras"].push_back(std::move(row));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        raise(ErrorCode::IoFailure, "cannot open index file for writing: " + path);
    out << doc.dump();
    if (!out)
        raise(ErrorCode::IoFailure, "failed writing index file: " + path);
}

CorpusIndex load_corpus_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::FileMissing, "cannot open index file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        raise(ErrorCode::SchemaViolation, "index file is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object() || doc.value("format", "") != "geek-index")
        raise(ErrorCode::SchemaViolation, "not a geek-index file: " + path);
    if (doc.value("version", 0) != 1)
        raise(ErrorCode::SchemaViolation, "unsupported index version in: " + path);
    if (!doc.contains("dim") || !doc.contains("docs") || !doc.contains("paras"))
        raise(ErrorCode::SchemaViolation, "index file missing dim/docs/paras");

    CorpusIndex index;
    index.doc_index.level = IndexLevel::Document;
    index.para_index.level = IndexLevel::Paragraph;
    index.doc_index.dim = doc["dim"].get<std::size_t>();
    index.para_index.dim = index.doc_index.dim;

    for (const auto& row : doc["docs"]) {
        IndexEntry e;
        e.id = row.at("id").get<std::string>();
        for (const auto& x : row.at("vec")) e.vec.values.push_back(x.get<double>());
        if (e.vec.dim() != index.doc_index.dim)
            raise(ErrorCode::SchemaViolation, "doc vector dim mismatch for " + e.id);
        index.doc_index.entries.push_back(std::move(e));
    }
    for (const auto& row : doc["paras"]) {
        IndexEntry e;
        e.id = row.at("id").get<std::string>();
        e.parent = row.at("parent").get<std::string>();
        for (const auto& x : row.at("vec")) e.vec.values.push_back(x.get<double>());
        if (e.vec.dim() != index.para_index.dim)
            raise(ErrorCode::SchemaViolation, "paragraph vector dim mismatch for " + e.id);
        index.para_texts[e.id] = row.value("text", "");
        index.para_index.entries.push_back(std::move(e));
    }
    return index;
}

std::vector<std::pair<std::string, double>> brute_force_topk(
    const EmbeddingVector& query_vec, const std::vector<IndexEntry>& entries, int k) {
    if (k < 1)
        raise(ErrorCode::InvalidArgument, "k must be >= 1");
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(entries.size());
    for (const IndexEntry& e : entries)
        scored.emplace_back(e.id, inner_product(query_vec, e.vec));
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > static_cast<std::size_t>(k))
        scored.resize(static_cast<std::size_t>(k));
    return scored;
}

std::vector<RetrievalHit> retrieve(const std::string& query, const CorpusIndex& index,
                                   Backend& embedder, const RetrievalConfig& cfg) {
    if (cfg.k < 1 || cfg.k_doc < 1)
        raise(ErrorCode::InvalidArgument, "k and k_doc must be >= 1");
    if (index.doc_index.entries.empty() || index.para_index.entries.empty())
        raise(ErrorCode::EmptyIndex, "index has no entries");

    std::vector<EmbeddingVector> q = embedder.embed({query});
    if (q.size() != 1)
        raise(ErrorCode::EmbedFailure, "embedder returned the wrong number of vectors");
    const EmbeddingVector& qvec = q.front();

    auto doc_hits = brute_force_topk(qvec, index.doc_index.entries, cfg.k_doc);
    std::set<std::string> retained;
    for (const auto& [doc_id, score] : doc_hits) retained.insert(doc_id);

    std::vector<IndexEntry> candidates;
    for (const IndexEntry& e : index.para_index.entries)
        if (retained.count(e.parent)) candidates.push_back(e);

    auto para_hits = brute_force_topk(qvec, candidates, cfg.k);

    std::map<std::string, std::string> parent_of;
    for (const IndexEntry& e : candidates) parent_of[e.id] = e.parent;

    std::vector<RetrievalHit> hits;
    for (const auto& [para_id, score] : para_hits)
        hits.push_back({para_id, parent_of[para_id], score});
    return hits;
}

} // namespace geek
