#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geek/backend.hpp"
#include "geek/qstate.hpp"

namespace geek {

struct StrategyQAItem {
    std::string qid;
    std::string question;
    std::optional<bool> answer;                            // train/dev only
    std::vector<std::string> decompositions;               // may contain "#i" refs
    std::vector<std::string> facts;
    std::vector<std::vector<std::string>> evidence_para_ids; // per decomposition
    bool has_evidence = false;
};

struct RefinedItem {
    StrategyQAItem base;
    std::vector<std::string> resolved_decompositions;
    std::vector<std::string> per_decomp_answers;
    bool refined = false;
    std::string failure;
};

enum class TaskTag {
    ActionSelect1,
    ActionSelect2,
    AddDecomp,
    SelfAnswer,
    FinalAnswer,
    ExtractorReader,
};

const char* task_tag_name(TaskTag tag);

struct TrainingPair {
    TaskTag tag = TaskTag::ActionSelect1;
    std::string input_text;
    std::string target_text;
};

enum class ErrorTag {
    UnreasonableDecomposition,
    WrongActionSelection,
    IncorrectFacts,
    LogicalDeductionError,
};

const char* error_tag_name(ErrorTag tag);
ErrorTag error_tag_from_string(const std::string& name);

struct ErrorAnnotation {
    std::string qid;
    bool correct = false;
    std::vector<ErrorTag> tags; // non-empty when correct is false
    std::string note;
};

/// True when the text contains a "#<digits>" reference.
bool contains_placeholder(const std::string& text);

/// Loads the published dataset layout (a JSON array of items; evidence is
/// per-annotator and the first annotator is taken; "operation" and
/// "no_evidence" markers yield empty id lists). Throws SchemaViolation
/// listing every offending qid with its problem.
std::vector<StrategyQAItem> load_dataset(const std::string& path);
std::vector<StrategyQAItem> parse_dataset(const std::string& text);
void save_dataset(const std::vector<StrategyQAItem>& items, const std::string& path);

/// Prompt asking a refiner model to inline every "#i" reference and attach a
/// short per-step answer, grounded in the item's gold facts.
std::string build_refinement_prompt(const StrategyQAItem& item);

/// One refiner call per item; items whose completion does not parse into
/// exactly one placeholder-free entry per decomposition come back with
/// refined=false and the failure noted. Backend errors are per-item too.
std::vector<RefinedItem> refine_annotations(const std::vector<StrategyQAItem>& items,
                                            Backend& refiner);

void save_refined_jsonl(const std::vector<RefinedItem>& items, const std::string& path);
std::vector<RefinedItem> load_refined_jsonl(const std::string& path);

/// Per-timestep supervision pairs. For an item with m decompositions of
/// which r are evidence-backed this emits (m+1) ActionSelect1 + m AddDecomp
/// + m ActionSelect2 + r ExtractorReader + (m-r) SelfAnswer + 1 FinalAnswer
/// = 4m+2 pairs. Unrefined items are skipped and reported via skipped_qids.
/// para_texts supplies reader paragraph texts; ids stand in when absent.
std::vector<TrainingPair> build_training_pairs(
    const std::vector<RefinedItem>& refined,
    const std::map<std::string, std::string>* para_texts = nullptr,
    std::vector<std::string>* skipped_qids = nullptr);

void save_training_pairs(const std::vector<TrainingPair>& pairs, const std::string& path);

/// Fraction of gold items whose predicted boolean matches. Throws
/// MissingPrediction listing absent qids.
double score_accuracy(const std::map<std::string, bool>& predictions,
                      const std::vector<StrategyQAItem>& gold);

struct PredictionRecord {
    std::string qid;
    Verdict verdict;
    std::vector<std::string> decomposition;
    std::vector<std::string> paragraphs;
};

/// Leaderboard-style file: one record per qid with answer, decomposition,
/// and paragraphs. Duplicate qids keep the last record and add a warning.
void write_predictions(const std::vector<PredictionRecord>& results, const std::string& path,
                       std::vector<std::string>* warnings = nullptr);

std::map<std::string, bool> load_predictions(const std::string& path);

void save_error_annotations(const std::vector<ErrorAnnotation>& annotations,
                            const std::string& path);
std::vector<ErrorAnnotation> load_error_annotations(const std::string& path);

} // namespace geek
