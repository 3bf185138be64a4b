#include "geek/trace.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

namespace geek {

namespace {

const char* kKindNames[] = {
    "prompt_sent",    "completion_received", "action_chosen", "step_added",
    "step_resolved",  "branched",            "verdict_issued", "mode_override",
    "forced_final",   "error_raised",
};

std::int64_t now_millis() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

} // namespace

const char* trace_kind_name(TraceKind kind) {
    return kKindNames[static_cast<int>(kind)];
}

TraceKind trace_kind_from_string(const std::string& name) {
    for (int i = 0; i < static_cast<int>(std::size(kKindNames)); ++i)
        if (name == kKindNames[i]) return static_cast<TraceKind>(i);
    raise(ErrorCode::SchemaViolation, "unknown trace kind: " + name);
}

const TraceEvent& Trace::record(TraceKind kind, nlohmann::ordered_json payload) {
    TraceEvent event;
    event.seq = events_.size() + 1;
    event.kind = kind;
    event.payload = std::move(payload);
    event.wall_clock = deterministic_ ? 0 : now_millis();
    events_.push_back(std::move(event));
    return events_.back();
}

std::size_t Trace::count(TraceKind kind) const {
    std::size_t n = 0;
    for (const TraceEvent& event : events_)
        if (event.kind == kind) ++n;
    return n;
}

std::string event_to_json_line(const TraceEvent& event) {
    nlohmann::ordered_json obj;
    obj["seq"] = event.seq;
    obj["kind"] = trace_kind_name(event.kind);
    obj["payload"] = event.payload;
    obj["wall_clock"] = event.wall_clock;
    return obj.dump();
}

TraceEvent event_from_json_line(const std::string& line) {
    nlohmann::ordered_json obj;
    try {
        obj = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::SchemaViolation, std::string("bad trace line: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("seq") || !obj.contains("kind") ||
        !obj.contains("payload") || !obj.contains("wall_clock"))
        raise(ErrorCode::SchemaViolation, "trace line missing required fields");
    TraceEvent event;
    event.seq = obj["seq"].get<std::uint64_t>();
    event.kind = trace_kind_from_string(obj["kind"].get<std::string>());
    event.payload = obj["payload"];
    event.wall_clock = obj["wall_clock"].get<std::int64_t>();
    return event;
}

std::string Trace::to_jsonl() const {
    std::ostringstream out;
    for (const TraceEvent& event : events_)
        out << event_to_json_line(event) << "\n";
    return out.str();
}

void Trace::save_jsonl(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        raise(ErrorCode::IoFailure, "cannot open trace file for writing: " + path);
    out << to_jsonl();
    if (!out)
        raise(ErrorCode::IoFailure, "failed writing trace file: " + path);
}

Trace Trace::from_jsonl(const std::string& text) {
    Trace trace;
    std::istringstream in(text);
    std::string line;
    std::uint64_t expected = 1;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        TraceEvent event = event_from_json_line(line);
        if (event.seq != expected)
            raise(ErrorCode::SchemaViolation, "trace sequence gap at event " + std::to_string(expected));
        ++expected;
        trace.events_.push_back(std::move(event));
    }
    return trace;
}

Trace Trace::load_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::FileMissing, "cannot open trace file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_jsonl(buffer.str());
}

bool traces_equal(const Trace& a, const Trace& b) {
    if (a.events().size() != b.events().size()) return false;
    for (std::size_t i = 0; i < a.events().size(); ++i) {
        const TraceEvent& x = a.events()[i];
        const TraceEvent& y = b.events()[i];
        if (x.seq != y.seq || x.kind != y.kind || x.payload != y.payload) return false;
    }
    return true;
}

} // namespace geek
