#pragma once

#include <string>
#include <vector>

#include "geek/backend.hpp"
#include "geek/trace.hpp"

namespace geek {

/// Generation wrappers that record the PromptSent / CompletionReceived pair
/// every generation call must leave in the trace. The payload shape is the
/// same for single and n-best calls so degenerate beams replay identically.
Completion traced_generate(Backend& backend, const std::string& prompt,
                           const GenParams& params, const char* purpose, Trace& trace);

std::vector<Completion> traced_generate_n(Backend& backend, const std::string& prompt,
                                          const GenParams& params, const char* purpose,
                                          Trace& trace);

} // namespace geek
