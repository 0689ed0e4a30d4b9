#include "muca/subtopics.hpp"

#include "muca/prompts.hpp"

#include <set>
#include <sstream>

namespace muca {

namespace {

std::vector<SubTopic> number_unique(const std::vector<std::string>& titles) {
    std::vector<SubTopic> out;
    std::set<std::string> seen;
    for (const auto& raw : titles) {
        auto title = trim(raw);
        if (title.empty() || !seen.insert(to_lower(title)).second) continue;
        out.push_back(SubTopic{static_cast<int>(out.size()) + 1, std::move(title)});
    }
    if (out.size() < 2) {
        throw GenerationError("sub-topic generation produced fewer than 2 distinct sub-topics");
    }
    return out;
}

std::string or_none(const std::string& s) { return trim(s).empty() ? "none" : s; }

}  // namespace

std::vector<SubTopic> SubTopicGenerator::generate(const SessionConfig& config, LlmClient& client) {
    if (done_) throw GenerationError("sub-topics are generated once per session");
    if (trim(config.inputs.topic).empty()) throw ConfigError("topic must be non-empty");
    done_ = true;

    if (!config.inputs.agenda.empty()) {
        if (config.inputs.agenda.size() > kMaxSubtopics) {
            throw GenerationError("agenda has " + std::to_string(config.inputs.agenda.size()) +
                                  " items; at most " + std::to_string(kMaxSubtopics) + " are supported");
        }
        return number_unique(config.inputs.agenda);
    }

    const auto count = static_cast<std::size_t>(config.subtopic_count);
    const Bindings bindings = {{"topic", config.inputs.topic},
                               {"hints", or_none(config.inputs.hints)},
                               {"attendee_roles", or_none(config.inputs.attendee_roles)},
                               {"count", std::to_string(count)}};
    std::string last_raw;
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            const auto resp = client.complete(prompts::subtopic_generation(), bindings);
            last_raw = resp.text;
            return number_unique(parse_lines(extract_answer(resp.text), count));
        } catch (const ParseError& e) {
            last_raw = e.raw();
        } catch (const ProviderUnavailable& e) {
            throw GenerationError(std::string("sub-topic generation failed: ") + e.what());
        }
    }
    throw GenerationError("could not parse " + std::to_string(count) + " sub-topics from completion: " + last_raw);
}

std::vector<SubTopic> generate_subtopics(const SessionConfig& config, LlmClient& client) {
    SubTopicGenerator gen;
    return gen.generate(config, client);
}

std::string format_subtopics(const std::vector<SubTopic>& subtopics) {
    std::ostringstream os;
    for (const auto& s : subtopics) os << s.index << ". " << s.title << '\n';
    return os.str();
}

}  // namespace muca
