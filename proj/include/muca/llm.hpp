#pragma once

#include "muca/core.hpp"

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace muca {

class RenderError : public Error {
public:
    explicit RenderError(std::string slot)
        : Error("missing template slot '" + slot + "'"), slot_(std::move(slot)) {}
    const std::string& slot() const { return slot_; }

private:
    std::string slot_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}
    const std::string& raw() const { return raw_; }

private:
    std::string raw_;
};

class ProviderUnavailable : public Error {
public:
    using Error::Error;
};

class ScriptMismatch : public Error {
public:
    using Error::Error;
};

/// Thrown by providers for failures that are worth retrying (timeouts,
/// connection resets, 429/5xx responses).
class TransientProviderError : public Error {
public:
    using Error::Error;
};

// +-----------------------------------+
// |         Prompt templates          |
// +-----------------------------------+

/// Template body with `{slot}` placeholders. Each required slot must occur
/// exactly once in the body.
class PromptTemplate {
public:
    PromptTemplate(std::string name, std::string body, std::vector<std::string> required_slots);

    const std::string& name() const { return name_; }
    const std::string& body() const { return body_; }
    const std::vector<std::string>& required_slots() const { return required_slots_; }

private:
    std::string name_;
    std::string body_;
    std::vector<std::string> required_slots_;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Substitutes every bound slot in a single pass; substituted values are not
/// rescanned. Unknown bindings are ignored.
std::string render(const PromptTemplate& tmpl, const Bindings& bindings);

// +-----------------------------------+
// |             Providers             |
// +-----------------------------------+

struct ProviderRequest {
    std::string template_name;
    std::string prompt;
    int max_output_hint = 512;
};

struct ProviderResponse {
    std::string text;
    std::int64_t latency_ms = 0;
    std::string provider_id;
};

class Provider {
public:
    virtual ~Provider() = default;

    ProviderResponse complete(const ProviderRequest& request) { return do_complete(request); }
    virtual std::string id() const = 0;

private:
    virtual ProviderResponse do_complete(const ProviderRequest& request) = 0;
};

struct ReplayRecord {
    std::string template_name;
    std::string prompt;
    std::string completion;
    std::int64_t ts = 0;

    bool operator==(const ReplayRecord&) const = default;
};

/// Line-delimited record of every completion, in request order.
class ReplayLog {
public:
    ReplayLog() = default;
    explicit ReplayLog(const std::filesystem::path& path);

    void append(ReplayRecord record);
    std::vector<ReplayRecord> records() const;
    std::size_t size() const;

    static std::vector<ReplayRecord> load(const std::filesystem::path& path);

private:
    mutable std::mutex mu_;
    std::vector<ReplayRecord> records_;
    std::ofstream out_;
};

std::string to_json_line(const ReplayRecord& r);
ReplayRecord replay_record_from_json(std::string_view line);

/// Deterministic provider replaying canned completions. Lookup order:
/// template-keyed queue, then the shared queue, then the rule callback.
class ScriptedProvider : public Provider {
public:
    using Rule = std::function<std::optional<std::string>(const ProviderRequest&)>;

    explicit ScriptedProvider(bool strict = true) : strict_(strict) {}

    ScriptedProvider& push(std::string completion);
    ScriptedProvider& push_for(const std::string& template_name, std::string completion);
    ScriptedProvider& set_rule(Rule rule);
    ScriptedProvider& set_fallback(std::string text);
    /// Non-strict scripts answer unmatched requests with the fallback.
    ScriptedProvider& set_strict(bool strict);

    /// Builds a strict, template-keyed script from a recorded session.
    static std::unique_ptr<ScriptedProvider> from_replay(const std::vector<ReplayRecord>& records);

    std::size_t calls() const;
    std::size_t calls_for(const std::string& template_name) const;
    std::vector<ProviderRequest> requests() const;
    std::string id() const override { return "scripted"; }

private:
    ProviderResponse do_complete(const ProviderRequest& request) override;

    bool strict_;
    mutable std::mutex mu_;
    std::deque<std::string> queue_;
    std::map<std::string, std::deque<std::string>, std::less<>> keyed_;
    Rule rule_;
    std::optional<std::string> fallback_;
    std::vector<ProviderRequest> requests_;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds base_delay{200};
};

/// Provider front end: retries transient failures with exponential backoff
/// and appends every completion to the replay log before it is parsed.
class LlmClient {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;
    using Clock = std::function<std::int64_t()>;

    explicit LlmClient(Provider& provider, RetryPolicy policy = {}, ReplayLog* log = nullptr);

    ProviderResponse complete(const ProviderRequest& request);
    ProviderResponse complete(const PromptTemplate& tmpl, const Bindings& bindings,
                              int max_output_hint = 512);

    void set_sleeper(Sleeper s) { sleeper_ = std::move(s); }
    void set_clock(Clock c) { clock_ = std::move(c); }
    ReplayLog* log() const { return log_; }
    Provider& provider() const { return provider_; }

private:
    Provider& provider_;
    RetryPolicy policy_;
    ReplayLog* log_;
    Sleeper sleeper_;
    Clock clock_;
};

// +-----------------------------------+
// |        Structured outputs         |
// +-----------------------------------+

inline constexpr std::string_view kAnswerMarker = "ANSWER:";

/// Text after the last answer marker, or the whole text if there is none.
std::string extract_answer(std::string_view text);

/// Trimmed non-empty lines with list numbering ("1.", "2)", "-", "*") removed.
std::vector<std::string> parse_lines(std::string_view text,
                                     std::optional<std::size_t> expected_count = std::nullopt);

enum class SubTopicStatus { NotDiscussed = 0, BeingDiscussed = 1, WellDiscussed = 2 };

std::string_view to_string(SubTopicStatus s);
std::optional<SubTopicStatus> parse_status(std::string_view label);

/// Parses "<index or title>: <status>" lines. Sub-topics that are not
/// mentioned are absent from the result.
std::map<int, SubTopicStatus> parse_status_labels(std::string_view text,
                                                  const std::vector<SubTopic>& subtopics);

}  // namespace muca
