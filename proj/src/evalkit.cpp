#include "geek/evalkit.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "geek/extract.hpp"
#include "geek/prompts.hpp"

namespace geek {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::FileMissing, "cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        raise(ErrorCode::IoFailure, "cannot open file for writing: " + path);
    out << content;
    if (!out)
        raise(ErrorCode::IoFailure, "failed writing file: " + path);
}

/// Checks every "#i" in decomposition number `position` (1-based) for
/// 1 <= i < position; reports the first bad reference.
std::optional<std::string> check_placeholders(const std::string& text, std::size_t position) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '#') continue;
        std::size_t j = i + 1;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        if (j == i + 1) continue;
        long ref = std::stol(text.substr(i + 1, j - i - 1));
        if (ref < 1 || ref >= static_cast<long>(position))
            return "decomposition " + std::to_string(position) + " references #" +
                   std::to_string(ref);
    }
    return std::nullopt;
}

std::vector<std::string> flatten_evidence_element(const json& element) {
    // One decomposition's evidence: a list mixing paragraph-id lists with
    // "operation" / "no_evidence" markers.
    std::vector<std::string> ids;
    if (!element.is_array()) return ids;
    for (const auto& member : element) {
        if (member.is_array()) {
            for (const auto& id : member)
                if (id.is_string()) ids.push_back(id.get<std::string>());
        }
    }
    return ids;
}

StrategyQAItem parse_item(const json& obj, std::vector<std::string>& problems) {
    StrategyQAItem item;
    if (!obj.is_object() || !obj.contains("qid") || !obj.contains("question")) {
        problems.push_back("(unknown qid): item must be an object with qid and question");
        return item;
    }
    item.qid = obj["qid"].get<std::string>();
    item.question = obj["question"].get<std::string>();
    if (item.question.empty())
        problems.push_back(item.qid + ": empty question");

    if (obj.contains("answer") && !obj["answer"].is_null())
        item.answer = obj["answer"].get<bool>();
    if (obj.contains("decomposition"))
        for (const auto& d : obj["decomposition"])
            item.decompositions.push_back(d.get<std::string>());
    if (obj.contains("facts"))
        for (const auto& f : obj["facts"]) item.facts.push_back(f.get<std::string>());

    if (obj.contains("evidence") && obj["evidence"].is_array() && !obj["evidence"].empty()) {
        item.has_evidence = true;
        const json& annotator = obj["evidence"].front();
        if (!annotator.is_array() || annotator.size() != item.decompositions.size()) {
            problems.push_back(item.qid + ": evidence not aligned with decompositions");
        } else {
            for (const auto& element : annotator)
                item.evidence_para_ids.push_back(flatten_evidence_element(element));
        }
    }
    if (!item.has_evidence)
        item.evidence_para_ids.assign(item.decompositions.size(), {});

    for (std::size_t d = 0; d < item.decompositions.size(); ++d)
        if (auto problem = check_placeholders(item.decompositions[d], d + 1))
            problems.push_back(item.qid + ": " + *problem);

    if (item.answer.has_value() != item.has_evidence)
        problems.push_back(item.qid + ": answer and evidence must both be present or both absent");
    return item;
}

DecompStep make_resolved_step(int index, const std::string& question, const std::string& fact,
                              const std::vector<std::string>& evidence) {
    DecompStep step;
    step.index = index;
    step.question_text = question;
    step.pseudo_answer = fact;
    step.fact = fact;
    if (evidence.empty()) {
        step.resolution = Resolution::SelfAnswered;
    } else {
        step.resolution = Resolution::Retrieved;
        step.paragraph_ids = evidence;
    }
    return step;
}

/// State with the first `resolved` decompositions answered.
QuestionState prefix_state(const RefinedItem& item, std::size_t resolved) {
    QuestionState state = make_state({item.base.qid, item.base.question});
    for (std::size_t i = 0; i < resolved; ++i)
        state.steps.push_back(make_resolved_step(static_cast<int>(i) + 1,
                                                 item.resolved_decompositions[i],
                                                 item.per_decomp_answers[i],
                                                 item.base.evidence_para_ids[i]));
    return state;
}

std::string remaining_plan_text(const RefinedItem& item, std::size_t from) {
    DecompPlan plan;
    for (std::size_t i = from; i < item.resolved_decompositions.size(); ++i)
        plan.entries.push_back({item.resolved_decompositions[i], item.per_decomp_answers[i]});
    return format_decomp_plan(plan, static_cast<int>(from) + 1);
}

} // namespace

const char* task_tag_name(TaskTag tag) {
    switch (tag) {
    case TaskTag::ActionSelect1: return "action_select1";
    case TaskTag::ActionSelect2: return "action_select2";
    case TaskTag::AddDecomp: return "add_decomp";
    case TaskTag::SelfAnswer: return "self_answer";
    case TaskTag::FinalAnswer: return "final_answer";
    case TaskTag::ExtractorReader: return "extractor_reader";
    }
    return "unknown";
}

const char* error_tag_name(ErrorTag tag) {
    switch (tag) {
    case ErrorTag::UnreasonableDecomposition: return "unreasonable_decomposition";
    case ErrorTag::WrongActionSelection: return "wrong_action_selection";
    case ErrorTag::IncorrectFacts: return "incorrect_facts";
    case ErrorTag::LogicalDeductionError: return "logical_deduction_error";
    }
    return "unknown";
}

ErrorTag error_tag_from_string(const std::string& name) {
    for (ErrorTag tag : {ErrorTag::UnreasonableDecomposition, ErrorTag::WrongActionSelection,
                         ErrorTag::IncorrectFacts, ErrorTag::LogicalDeductionError})
        if (name == error_tag_name(tag)) return tag;
    raise(ErrorCode::SchemaViolation, "unknown error tag: " + name);
}

bool contains_placeholder(const std::string& text) {
    for (std::size_t i = 0; i + 1 < text.size(); ++i)
        if (text[i] == '#' && std::isdigit(static_cast<unsigned char>(text[i + 1])))
            return true;
    return false;
}

std::vector<StrategyQAItem> parse_dataset(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        raise(ErrorCode::SchemaViolation, "dataset is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_array())
        raise(ErrorCode::SchemaViolation, "dataset must be a JSON array of items");

    std::vector<StrategyQAItem> items;
    std::vector<std::string> problems;
    for (const auto& obj : doc) items.push_back(parse_item(obj, problems));
    if (!problems.empty()) {
        std::string msg = std::to_string(problems.size()) + " malformed item(s):";
        for (const std::string& p : problems) msg += "\n  " + p;
        raise(ErrorCode::SchemaViolation, msg);
    }
    return items;
}

std::vector<StrategyQAItem> load_dataset(const std::string& path) {
    return parse_dataset(read_file(path));
}

void save_dataset(const std::vector<StrategyQAItem>& items, const std::string& path) {
    ordered_json doc = ordered_json::array();
    for (const StrategyQAItem& item : items) {
        ordered_json obj;
        obj["qid"] = item.qid;
        obj["question"] = item.question;
        if (item.answer) obj["answer"] = *item.answer;
        if (!item.decompositions.empty()) obj["decomposition"] = item.decompositions;
        if (!item.facts.empty()) obj["facts"] = item.facts;
        if (item.has_evidence) {
            ordered_json annotator = ordered_json::array();
            for (const auto& ids : item.evidence_para_ids) {
                ordered_json element = ordered_json::array();
                if (ids.empty())
                    element.push_back("no_evidence");
                else
                    element.push_back(ids);
                annotator.push_back(std::move(element));
            }
            obj["evidence"] = ordered_json::array({std::move(annotator)});
        }
        doc.push_back(std::move(obj));
    }
    write_file(path, doc.dump(2) + "\n");
}

std::string build_refinement_prompt(const StrategyQAItem& item) {
    if (!item.answer || item.facts.empty())
        raise(ErrorCode::InvalidArgument,
              "refinement needs answer and facts (item " + item.qid + ")");
    std::ostringstream out;
    out << "Rewrite each step below so it stands alone: replace every '#1'-style "
           "reference with the words it points to, using only the given facts. After "
           "each rewritten step, give a short answer taken from those facts. Reply in "
           "the format \"(i) [Q] (rewritten step) [A] (short answer)\" with one entry "
           "per step.";
    out << "\nQuestion: " << item.question;
    out << "\nFinal answer: " << (*item.answer ? "yes" : "no");
    out << "\nFacts:";
    for (const std::string& fact : item.facts) out << " " << fact;
    out << "\nSteps:";
    for (std::size_t i = 0; i < item.decompositions.size(); ++i)
        out << " (" << i + 1 << ") " << item.decompositions[i];
    return out.str();
}

std::vector<RefinedItem> refine_annotations(const std::vector<StrategyQAItem>& items,
                                            Backend& refiner) {
    std::vector<RefinedItem> out;
    for (const StrategyQAItem& item : items) {
        RefinedItem refined;
        refined.base = item;
        refined.resolved_decompositions = item.decompositions;

        auto fail = [&](const std::string& why) {
            refined.refined = false;
            refined.failure = why;
            refined.per_decomp_answers.clear();
        };

        try {
            std::string prompt = build_refinement_prompt(item);
            Completion c = refiner.generate(prompt, GenParams{});
            DecompPlan plan = parse_decomp_plan(c.text);
            if (plan.entries.size() != item.decompositions.size()) {
                fail("refiner returned " + std::to_string(plan.entries.size()) +
                     " entries for " + std::to_string(item.decompositions.size()) +
                     " decompositions");
            } else {
                refined.refined = true;
                for (const DecompEntry& entry : plan.entries) {
                    if (contains_placeholder(entry.question_text)) {
                        fail("refined step still contains a placeholder: " +
                             entry.question_text);
                        break;
                    }
                    if (entry.pseudo_answer.empty()) {
                        fail("refined step lacks an answer: " + entry.question_text);
                        break;
                    }
                }
                if (refined.refined) {
                    refined.resolved_decompositions.clear();
                    for (const DecompEntry& entry : plan.entries) {
                        refined.resolved_decompositions.push_back(entry.question_text);
                        refined.per_decomp_answers.push_back(entry.pseudo_answer);
                    }
                }
            }
        } catch (const Error& e) {
            fail(e.what());
        }
        if (!refined.refined) refined.resolved_decompositions = item.decompositions;
        out.push_back(std::move(refined));
    }
    return out;
}

void save_refined_jsonl(const std::vector<RefinedItem>& items, const std::string& path) {
    std::ostringstream out;
    for (const RefinedItem& item : items) {
        ordered_json obj;
        obj["qid"] = item.base.qid;
        obj["question"] = item.base.question;
        obj["answer"] = item.base.answer ? json(*item.base.answer) : json(nullptr);
        obj["facts"] = item.base.facts;
        obj["decomposition"] = item.base.decompositions;
        obj["evidence"] = item.base.evidence_para_ids;
        obj["resolved_decomposition"] = item.resolved_decompositions;
        obj["per_decomp_answers"] = item.per_decomp_answers;
        obj["refined"] = item.refined;
        obj["failure"] = item.failure;
        out << obj.dump() << "\n";
    }
    write_file(path, out.str());
}

std::vector<RefinedItem> load_refined_jsonl(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<RefinedItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        RefinedItem item;
        try {
            json obj = json::parse(line);
            item.base.qid = obj.at("qid").get<std::string>();
            item.base.question = obj.at("question").get<std::string>();
            if (obj.contains("answer") && !obj["answer"].is_null())
                item.base.answer = obj["answer"].get<bool>();
            for (const auto& f : obj.value("facts", json::array()))
                item.base.facts.push_back(f.get<std::string>());
            for (const auto& d : obj.value("decomposition", json::array()))
                item.base.decompositions.push_back(d.get<std::string>());
            for (const auto& e : obj.value("evidence", json::array())) {
                std::vector<std::string> ids;
                for (const auto& id : e) ids.push_back(id.get<std::string>());
                item.base.evidence_para_ids.push_back(std::move(ids));
            }
            item.base.has_evidence = !item.base.evidence_para_ids.empty();
            for (const auto& d : obj.value("resolved_decomposition", json::array()))
                item.resolved_decompositions.push_back(d.get<std::string>());
            for (const auto& a : obj.value("per_decomp_answers", json::array()))
                item.per_decomp_answers.push_back(a.get<std::string>());
            item.refined = obj.value("refined", false);
            item.failure = obj.value("failure", "");
        } catch (const json::exception& e) {
            raise(ErrorCode::SchemaViolation,
                  "refined line " + std::to_string(line_no) + ": " + e.what());
        }
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<TrainingPair> build_training_pairs(
    const std::vector<RefinedItem>& refined,
    const std::map<std::string, std::string>* para_texts,
    std::vector<std::string>* skipped_qids) {
    std::vector<TrainingPair> pairs;
    for (const RefinedItem& item : refined) {
        auto skip = [&](const std::string& qid) {
            if (skipped_qids) skipped_qids->push_back(qid);
        };
        if (!item.refined || !item.base.answer) {
            skip(item.base.qid);
            continue;
        }
        std::size_t m = item.resolved_decompositions.size();
        if (item.per_decomp_answers.size() != m || item.base.evidence_para_ids.size() != m ||
            m == 0) {
            skip(item.base.qid);
            continue;
        }

        for (std::size_t t = 0; t <= m; ++t) {
            QuestionState state = prefix_state(item, t);
            pairs.push_back({TaskTag::ActionSelect1,
                             compose_input(state, render_prompt(PromptKind::ActionSelect1, state)),
                             t < m ? "[B]" : "[A]"});
            if (t < m)
                pairs.push_back({TaskTag::AddDecomp,
                                 compose_input(state, render_prompt(PromptKind::AddDecomp, state)),
                                 remaining_plan_text(item, t)});
        }

        for (std::size_t i = 0; i < m; ++i) {
            QuestionState state = prefix_state(item, i);
            state = append_decomp(state, item.resolved_decompositions[i],
                                  item.per_decomp_answers[i]);
            const std::vector<std::string>& evidence = item.base.evidence_para_ids[i];
            pairs.push_back(
                {TaskTag::ActionSelect2,
                 compose_input(state, render_prompt(PromptKind::ActionSelect2, state,
                                                    {{"Decomp",
                                                      item.resolved_decompositions[i]}})),
                 evidence.empty() ? "[B]" : "[A]"});
            if (evidence.empty()) {
                pairs.push_back(
                    {TaskTag::SelfAnswer,
                     compose_input(state, render_prompt(PromptKind::SelfAnswer, state,
                                                        {{"Decomp",
                                                          item.resolved_decompositions[i]}})),
                     item.per_decomp_answers[i]});
            } else {
                ExtractionRequest request;
                request.decomp = item.resolved_decompositions[i];
                request.pseudo_answer = item.per_decomp_answers[i];
                for (const std::string& para_id : evidence) {
                    std::string text = para_id;
                    if (para_texts) {
                        auto it = para_texts->find(para_id);
                        if (it != para_texts->end()) text = it->second;
                    }
                    request.paragraphs.emplace_back(para_id, text);
                }
                pairs.push_back({TaskTag::ExtractorReader, build_extractor_prompt(request),
                                 item.per_decomp_answers[i]});
            }
        }

        QuestionState full = prefix_state(item, m);
        std::string rationale = "Reasoning steps:";
        for (const std::string& answer : item.per_decomp_answers) rationale += " " + answer;
        pairs.push_back({TaskTag::FinalAnswer,
                         compose_input(full, render_prompt(PromptKind::FinalAnswer, full)),
                         rationale + " Therefore, the final answer is: " +
                             (*item.base.answer ? "yes" : "no")});
    }
    return pairs;
}

void save_training_pairs(const std::vector<TrainingPair>& pairs, const std::string& path) {
    std::ostringstream out;
    for (const TrainingPair& pair : pairs) {
        ordered_json obj;
        obj["task_tag"] = task_tag_name(pair.tag);
        obj["input"] = pair.input_text;
        obj["target"] = pair.target_text;
        out << obj.dump() << "\n";
    }
    write_file(path, out.str());
}

double score_accuracy(const std::map<std::string, bool>& predictions,
                      const std::vector<StrategyQAItem>& gold) {
    if (gold.empty())
        raise(ErrorCode::InvalidArgument, "gold set must be non-empty");
    std::vector<std::string> missing;
    std::size_t correct = 0;
    for (const StrategyQAItem& item : gold) {
        if (!item.answer)
            raise(ErrorCode::InvalidArgument, "gold item has no answer: " + item.qid);
        auto it = predictions.find(item.qid);
        if (it == predictions.end()) {
            missing.push_back(item.qid);
            continue;
        }
        if (it->second == *item.answer) ++correct;
    }
    if (!missing.empty()) {
        std::string msg = "missing predictions for " + std::to_string(missing.size()) +
                          " qid(s):";
        for (const std::string& qid : missing) msg += " " + qid;
        raise(ErrorCode::MissingPrediction, msg);
    }
    return static_cast<double>(correct) / static_cast<double>(gold.size());
}

void write_predictions(const std::vector<PredictionRecord>& results, const std::string& path,
                       std::vector<std::string>* warnings) {
    if (results.empty())
        raise(ErrorCode::InvalidArgument, "results must be non-empty");
    ordered_json doc;
    for (const PredictionRecord& record : results) {
        if (doc.contains(record.qid) && warnings)
            warnings->push_back("duplicate qid overwritten: " + record.qid);
        ordered_json obj;
        obj["answer"] = record.verdict.answer == YesNo::Yes;
        obj["decomposition"] = record.decomposition;
        obj["paragraphs"] = record.paragraphs;
        doc[record.qid] = std::move(obj);
    }
    write_file(path, doc.dump(2) + "\n");
}

std::map<std::string, bool> load_predictions(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        raise(ErrorCode::SchemaViolation,
              "predictions file is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object())
        raise(ErrorCode::SchemaViolation, "predictions file must be an object keyed by qid");
    std::map<std::string, bool> out;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (it.value().is_boolean())
            out[it.key()] = it.value().get<bool>();
        else if (it.value().is_object() && it.value().contains("answer"))
            out[it.key()] = it.value()["answer"].get<bool>();
        else
            raise(ErrorCode::SchemaViolation, "prediction for " + it.key() + " has no answer");
    }
    return out;
}

void save_error_annotations(const std::vector<ErrorAnnotation>& annotations,
                            const std::string& path) {
    std::ostringstream out;
    for (const ErrorAnnotation& a : annotations) {
        if (!a.correct && a.tags.empty())
            raise(ErrorCode::SchemaViolation,
                  "incorrect item must carry at least one error tag: " + a.qid);
        ordered_json obj;
        obj["qid"] = a.qid;
        obj["correct"] = a.correct;
        ordered_json tags = ordered_json::array();
        for (ErrorTag tag : a.tags) tags.push_back(error_tag_name(tag));
        obj["tags"] = std::move(tags);
        obj["note"] = a.note;
        out << obj.dump() << "\n";
    }
    write_file(path, out.str());
}

std::vector<ErrorAnnotation> load_error_annotations(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<ErrorAnnotation> annotations;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            raise(ErrorCode::SchemaViolation,
                  "annotation line " + std::to_string(line_no) + ": " + e.what());
        }
        ErrorAnnotation a;
        a.qid = obj.at("qid").get<std::string>();
        a.correct = obj.at("correct").get<bool>();
        for (const auto& tag : obj.value("tags", json::array()))
            a.tags.push_back(error_tag_from_string(tag.get<std::string>()));
        a.note = obj.value("note", "");
        if (!a.correct && a.tags.empty())
            raise(ErrorCode::SchemaViolation,
                  "incorrect item must carry at least one error tag: " + a.qid);
        annotations.push_back(std::move(a));
    }
    return annotations;
}

} // namespace geek
