#pragma once

// Shared helpers for driving the engine against scripted backends in tests.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>
#include <unistd.h>

#include "geek/engine.hpp"
#include "geek/evalkit.hpp"
#include "geek/explorer.hpp"
#include "geek/prompts.hpp"
#include "geek/qstate.hpp"
#include "geek/scripted_backend.hpp"

namespace support {

inline std::string fixture_path(const std::string& name) {
    return std::string(GEEK_FIXTURES_DIR "/") + name;
}

inline std::string resource_path(const std::string& name) {
    return std::string(GEEK_RESOURCES_DIR "/") + name;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + path);
}

/// Fresh directory under the system temp root, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string pattern =
            (std::filesystem::temp_directory_path() / "geek-test-XXXXXX").string();
        std::vector<char> buffer(pattern.begin(), pattern.end());
        buffer.push_back('\0');
        if (mkdtemp(buffer.data()) == nullptr)
            throw std::runtime_error("mkdtemp failed for " + pattern);
        path_ = buffer.data();
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const { return path_ + "/" + name; }

private:
    std::string path_;
};

/// Assembles script manifests for ScriptedBackend.
class ScriptBuilder {
public:
    ScriptBuilder& replies(const std::string& prompt, std::vector<std::string> responses) {
        nlohmann::json entry;
        entry["prompt"] = prompt;
        entry["responses"] = std::move(responses);
        responses_.push_back(std::move(entry));
        return *this;
    }
    ScriptBuilder& reply(const std::string& prompt, const std::string& response) {
        return replies(prompt, std::vector<std::string>{response});
    }
    ScriptBuilder& embedding(const std::string& text, const std::vector<double>& values) {
        embeddings_[text] = values;
        return *this;
    }
    ScriptBuilder& dim(std::size_t d) {
        dim_ = d;
        return *this;
    }
    ScriptBuilder& seed(std::uint64_t s) {
        seed_ = s;
        return *this;
    }

    nlohmann::json manifest() const {
        nlohmann::json m;
        m["responses"] = responses_;
        if (!embeddings_.empty()) m["embeddings"] = embeddings_;
        if (dim_ != 0) m["embedding_dim"] = dim_;
        if (seed_ != 0) m["embedding_seed"] = seed_;
        return m;
    }

private:
    nlohmann::json responses_ = nlohmann::json::array();
    nlohmann::json embeddings_ = nlohmann::json::object();
    std::size_t dim_ = 0;
    std::uint64_t seed_ = 0;
};

// Exact prompts the engine sends for each action, for scripting responses.

inline std::string as1_input(const geek::QuestionState& s) {
    return geek::compose_input(s, geek::render_prompt(geek::PromptKind::ActionSelect1, s));
}

inline std::string as2_input(const geek::QuestionState& s) {
    return geek::compose_input(
        s, geek::render_prompt(geek::PromptKind::ActionSelect2, s,
                               {{"Decomp", s.pending_step()->question_text}}));
}

inline std::string add_decomp_input(const geek::QuestionState& s) {
    return geek::compose_input(s, geek::render_prompt(geek::PromptKind::AddDecomp, s));
}

inline std::string self_answer_input(const geek::QuestionState& s) {
    return geek::compose_input(
        s, geek::render_prompt(geek::PromptKind::SelfAnswer, s,
                               {{"Decomp", s.pending_step()->question_text}}));
}

inline std::string final_answer_input(const geek::QuestionState& s) {
    return geek::compose_input(s, geek::render_prompt(geek::PromptKind::FinalAnswer, s));
}

inline std::string zero_shot_input(const geek::QuestionState& s) {
    return geek::render_prompt(geek::PromptKind::System, s) +
           "\nAnswer yes or no: " + s.question.text;
}

/// Index-free lineage script: AS1 picks [B] for `rounds` rounds, each round
/// adds one self-answered step, then the run concludes. With conclude=true
/// the script ends via AS1 [A]; with conclude=false the AS1 entry is absent
/// and only a forced final can reach the closing FinalAnswer prompt.
struct LineageScript {
    nlohmann::json manifest;
    geek::QuestionState final_state; // all steps resolved, no verdict
    geek::YesNo answer = geek::YesNo::No;
};

inline LineageScript build_lineage_script(const geek::Question& q, int rounds,
                                          std::mt19937& rng, bool conclude) {
    ScriptBuilder sb;
    geek::QuestionState state = geek::make_state(q);
    for (int r = 0; r < rounds; ++r) {
        sb.reply(as1_input(state), "[B]");
        std::string d = "Is sub-question " + std::to_string(r + 1) + " variant " +
                        std::to_string(rng() % 1000) + " settled?";
        std::string pseudo = rng() % 2 == 0 ? "Yes" : "No";
        sb.reply(add_decomp_input(state),
                 "(" + std::to_string(r + 1) + ") [Q] " + d + " [A] " + pseudo);
        state = geek::append_decomp(state, d, pseudo);
        sb.reply(as2_input(state), rng() % 2 == 0 ? "[A]" : "[B]");
        std::string fact = "Step " + std::to_string(r + 1) + " settles on " + pseudo + ".";
        sb.reply(self_answer_input(state), fact);
        state = geek::resolve_step(state, fact, geek::Resolution::SelfAnswered);
    }
    geek::YesNo answer = rng() % 2 == 0 ? geek::YesNo::Yes : geek::YesNo::No;
    std::string word = geek::yes_no_name(answer);
    std::string final_text;
    switch (rng() % 3) {
    case 0:
        final_text = "Reasoning steps: combining every step. Therefore, the final answer is: " +
                     word;
        break;
    case 1: final_text = "The final answer is " + word + "."; break;
    default: final_text = "Weighing everything, I would say " + word; break;
    }
    if (conclude) sb.reply(as1_input(state), "[A]");
    sb.reply(final_answer_input(state), final_text);
    return {sb.manifest(), state, answer};
}

/// Lineage id assigned by the explorer's FIFO traversal to the leaf that took
/// round-1 plan `a` and round-2 plan `b` under a 4-way branch at both rounds.
inline int grid_leaf_id(int a, int b) {
    if (b == 0) return a;
    if (a == 0) return 3 + b;
    return 3 + 3 * a + b;
}

/// Index-free script that branches four ways at rounds 1 and 2. Each of the
/// 16 (a, b) lineages concludes with answers[grid_leaf_id(a, b)].
inline nlohmann::json build_grid_script(const geek::Question& q,
                                        const std::vector<std::string>& answers) {
    if (answers.size() != 16) throw std::runtime_error("grid script needs 16 answers");
    ScriptBuilder sb;
    geek::QuestionState s0 = geek::make_state(q);
    sb.reply(as1_input(s0), "[B]");

    std::vector<std::string> d1(4);
    std::vector<std::string> plans1;
    for (int a = 0; a < 4; ++a) {
        d1[a] = "Is component " + std::to_string(a + 1) + " within scope?";
        plans1.push_back("(1) [Q] " + d1[a] + " [A] Yes");
    }
    sb.replies(add_decomp_input(s0), plans1);

    for (int a = 0; a < 4; ++a) {
        geek::QuestionState s1 = geek::append_decomp(s0, d1[a], "Yes");
        sb.reply(as2_input(s1), "[B]");
        std::string f1 = "Component " + std::to_string(a + 1) + " is within scope.";
        sb.reply(self_answer_input(s1), f1);
        geek::QuestionState s2 = geek::resolve_step(s1, f1, geek::Resolution::SelfAnswered);

        sb.reply(as1_input(s2), "[B]");
        std::vector<std::string> d2(4);
        std::vector<std::string> plans2;
        for (int b = 0; b < 4; ++b) {
            d2[b] = "Does check " + std::to_string(a + 1) + "-" + std::to_string(b + 1) +
                    " pass?";
            plans2.push_back("(2) [Q] " + d2[b] + " [A] Yes");
        }
        sb.replies(add_decomp_input(s2), plans2);

        for (int b = 0; b < 4; ++b) {
            geek::QuestionState s3 = geek::append_decomp(s2, d2[b], "Yes");
            sb.reply(as2_input(s3), "[B]");
            std::string f2 = "Check " + std::to_string(a + 1) + "-" + std::to_string(b + 1) +
                             " passes.";
            sb.reply(self_answer_input(s3), f2);
            geek::QuestionState s4 = geek::resolve_step(s3, f2, geek::Resolution::SelfAnswered);

            sb.reply(as1_input(s4), "[A]");
            sb.reply(final_answer_input(s4),
                     "Reasoning steps: both checks hold. Therefore, the final answer is: " +
                         answers[static_cast<std::size_t>(grid_leaf_id(a, b))]);
        }
    }
    return sb.manifest();
}

/// Placeholder-free rewrite of each strategyqa_mini.json decomposition, one
/// "(i) [Q] ... [A] ..." entry per step.
inline std::string mini_refined_plan(const std::string& qid) {
    static const std::map<std::string, std::string> plans = {
        {"mq001",
         "(1) [Q] What is the top speed of a sloth? [A] About 0.27 km/h "
         "(2) [Q] Is 0.27 km/h greater than the top speed of a cheetah? [A] No"},
        {"mq002",
         "(1) [Q] How long is a standard ruler? [A] 30 cm "
         "(2) [Q] Is three times 30 cm at least one meter? [A] No"},
        {"mq003",
         "(1) [Q] When was the telephone invented? [A] 1876 "
         "(2) [Q] When did the Napoleonic Wars end? [A] 1815 "
         "(3) [Q] Is 1876 before 1815? [A] No"},
        {"mq004",
         "(1) [Q] How long is a blue whale? [A] About 30 meters "
         "(2) [Q] How long is an Olympic swimming pool? [A] 50 meters "
         "(3) [Q] How deep is an Olympic swimming pool? [A] At least 2 meters "
         "(4) [Q] Does a 30 meter whale fit inside a 50 meter pool? [A] Yes"},
        {"mq005",
         "(1) [Q] How tall is the Eiffel Tower? [A] 330 meters "
         "(2) [Q] Is 330 meters taller than the 93 meter Statue of Liberty? [A] Yes"},
        {"mq006",
         "(1) [Q] How far is Paris from Berlin by road? [A] About 1050 km "
         "(2) [Q] What is a typical highway speed limit? [A] About 130 km/h "
         "(3) [Q] Is 1050 km at 130 km/h under two hours? [A] No"},
        {"mq007",
         "(1) [Q] Where do penguins live? [A] The Southern Hemisphere "
         "(2) [Q] Is the North Pole part of the Southern Hemisphere? [A] No"},
        {"mq008",
         "(1) [Q] How much water does a teaspoon hold? [A] About 5 ml "
         "(2) [Q] How much rain falls in a rainy week? [A] Several liters per square meter "
         "(3) [Q] Is several liters per square meter more than 5 ml? [A] Yes"},
        {"mq009",
         "(1) [Q] When did chess originate? [A] Around the 6th century "
         "(2) [Q] Is the 6th century before the 9th century printed books? [A] Yes"},
        {"mq010",
         "(1) [Q] Does honey spoil at room temperature? [A] No "
         "(2) [Q] Can honey that never spoils at room temperature spoil on a pantry "
         "shelf? [A] No"},
    };
    auto it = plans.find(qid);
    if (it == plans.end()) throw std::runtime_error("no refined plan for " + qid);
    return it->second;
}

inline nlohmann::json mini_refiner_manifest(const std::vector<geek::StrategyQAItem>& items) {
    ScriptBuilder sb;
    for (const geek::StrategyQAItem& item : items)
        sb.reply(geek::build_refinement_prompt(item), mini_refined_plan(item.qid));
    return sb.manifest();
}

} // namespace support
