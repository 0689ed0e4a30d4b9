#pragma once

#include "muca/core.hpp"
#include "muca/llm.hpp"

#include <vector>

namespace muca {

class GenerationError : public Error {
public:
    using Error::Error;
};

inline constexpr std::size_t kMaxSubtopics = 6;

/// One-shot sub-topic derivation. Agenda items, when given, are used
/// verbatim and the provider is not consulted. The result is frozen: a
/// second call on the same generator throws.
class SubTopicGenerator {
public:
    std::vector<SubTopic> generate(const SessionConfig& config, LlmClient& client);

    bool done() const { return done_; }

private:
    bool done_ = false;
};

/// Free-function form for callers that do not keep a generator around.
std::vector<SubTopic> generate_subtopics(const SessionConfig& config, LlmClient& client);

/// "1. title" lines, one per sub-topic.
std::string format_subtopics(const std::vector<SubTopic>& subtopics);

}  // namespace muca
