#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "geek/errors.hpp"

namespace geek {

enum class TraceKind {
    PromptSent,
    CompletionReceived,
    ActionChosen,
    StepAdded,
    StepResolved,
    Branched,
    VerdictIssued,
    ModeOverride,
    ForcedFinal,
    ErrorRaised,
};

const char* trace_kind_name(TraceKind kind);
TraceKind trace_kind_from_string(const std::string& name);

struct TraceEvent {
    std::uint64_t seq = 0;
    TraceKind kind = TraceKind::PromptSent;
    nlohmann::ordered_json payload;
    std::int64_t wall_clock = 0; // unix milliseconds, 0 in deterministic mode
};

/// Append-only event log. Sequence numbers start at 1 with no gaps, so
/// two runs match byte-for-byte exactly when they took the same path.
class Trace {
public:
    explicit Trace(bool deterministic = true) : deterministic_(deterministic) {}

    const TraceEvent& record(TraceKind kind, nlohmann::ordered_json payload);

    const std::vector<TraceEvent>& events() const { return events_; }
    bool deterministic() const { return deterministic_; }
    std::size_t size() const { return events_.size(); }

    std::size_t count(TraceKind kind) const;

    /// One JSON object per line with fields seq, kind, payload, wall_clock.
    std::string to_jsonl() const;
    void save_jsonl(const std::string& path) const;

    static Trace from_jsonl(const std::string& text);
    static Trace load_jsonl(const std::string& path);

private:
    bool deterministic_;
    std::vector<TraceEvent> events_;
};

std::string event_to_json_line(const TraceEvent& event);
TraceEvent event_from_json_line(const std::string& line);

bool traces_equal(const Trace& a, const Trace& b);

} // namespace geek
