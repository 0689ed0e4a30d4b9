#include "muca/llm.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>
#include <thread>

namespace muca {

using json = nlohmann::json;

namespace {

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        out.emplace_back(text.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

// Drops "1.", "12)", "-", "*" list markers.
std::string strip_numbering(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) {
        return trim(line.substr(i + 1));
    }
    if (!line.empty() && (line[0] == '-' || line[0] == '*')) return trim(line.substr(1));
    return std::string(line);
}

std::int64_t wall_clock_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

// +-----------------------------------+
// |         Prompt templates          |
// +-----------------------------------+

PromptTemplate::PromptTemplate(std::string name, std::string body, std::vector<std::string> required_slots)
    : name_(std::move(name)), body_(std::move(body)), required_slots_(std::move(required_slots)) {
    for (const auto& slot : required_slots_) {
        const auto n = count_occurrences(body_, "{" + slot + "}");
        if (n != 1) {
            throw ParameterError("template '" + name_ + "': slot '" + slot + "' occurs " +
                                 std::to_string(n) + " times (expected exactly once)");
        }
    }
}

std::string render(const PromptTemplate& tmpl, const Bindings& bindings) {
    for (const auto& slot : tmpl.required_slots()) {
        if (!bindings.contains(slot)) throw RenderError(slot);
    }
    const std::string& body = tmpl.body();
    std::string out;
    out.reserve(body.size());
    std::size_t i = 0;
    while (i < body.size()) {
        if (body[i] == '{') {
            auto j = i + 1;
            while (j < body.size() && is_ident_char(body[j])) ++j;
            if (j < body.size() && body[j] == '}' && j > i + 1) {
                const std::string_view slot(body.data() + i + 1, j - i - 1);
                if (auto it = bindings.find(slot); it != bindings.end()) {
                    out += it->second;
                    i = j + 1;
                    continue;
                }
            }
        }
        out += body[i++];
    }
    return out;
}

// +-----------------------------------+
// |            Replay log             |
// +-----------------------------------+

std::string to_json_line(const ReplayRecord& r) {
    json j = {{"template_name", r.template_name},
              {"prompt", r.prompt},
              {"completion", r.completion},
              {"ts", r.ts}};
    return j.dump();
}

ReplayRecord replay_record_from_json(std::string_view line) {
    const auto j = json::parse(line);
    return ReplayRecord{j.at("template_name").get<std::string>(), j.at("prompt").get<std::string>(),
                        j.at("completion").get<std::string>(), j.value("ts", std::int64_t{0})};
}

ReplayLog::ReplayLog(const std::filesystem::path& path) : out_(path, std::ios::out | std::ios::trunc) {
    if (!out_) throw Error("cannot open replay log '" + path.string() + "'");
}

void ReplayLog::append(ReplayRecord record) {
    std::lock_guard lock(mu_);
    if (out_.is_open()) {
        out_ << to_json_line(record) << '\n';
        out_.flush();
    }
    records_.push_back(std::move(record));
}

std::vector<ReplayRecord> ReplayLog::records() const {
    std::lock_guard lock(mu_);
    return records_;
}

std::size_t ReplayLog::size() const {
    std::lock_guard lock(mu_);
    return records_.size();
}

std::vector<ReplayRecord> ReplayLog::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read replay log '" + path.string() + "'");
    std::vector<ReplayRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        out.push_back(replay_record_from_json(line));
    }
    return out;
}

// +-----------------------------------+
// |         Scripted provider         |
// +-----------------------------------+

ScriptedProvider& ScriptedProvider::push(std::string completion) {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(completion));
    return *this;
}

ScriptedProvider& ScriptedProvider::push_for(const std::string& template_name, std::string completion) {
    std::lock_guard lock(mu_);
    keyed_[template_name].push_back(std::move(completion));
    return *this;
}

ScriptedProvider& ScriptedProvider::set_rule(Rule rule) {
    std::lock_guard lock(mu_);
    rule_ = std::move(rule);
    return *this;
}

ScriptedProvider& ScriptedProvider::set_strict(bool strict) {
    std::lock_guard lock(mu_);
    strict_ = strict;
    return *this;
}

ScriptedProvider& ScriptedProvider::set_fallback(std::string text) {
    std::lock_guard lock(mu_);
    fallback_ = std::move(text);
    return *this;
}

std::unique_ptr<ScriptedProvider> ScriptedProvider::from_replay(const std::vector<ReplayRecord>& records) {
    auto p = std::make_unique<ScriptedProvider>(true);
    for (const auto& r : records) p->keyed_[r.template_name].push_back(r.completion);
    return p;
}

std::size_t ScriptedProvider::calls() const {
    std::lock_guard lock(mu_);
    return requests_.size();
}

std::size_t ScriptedProvider::calls_for(const std::string& template_name) const {
    std::lock_guard lock(mu_);
    return static_cast<std::size_t>(std::count_if(requests_.begin(), requests_.end(), [&](const auto& r) {
        return r.template_name == template_name;
    }));
}

std::vector<ProviderRequest> ScriptedProvider::requests() const {
    std::lock_guard lock(mu_);
    return requests_;
}

ProviderResponse ScriptedProvider::do_complete(const ProviderRequest& request) {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
    ProviderResponse resp{{}, 0, id()};
    if (auto it = keyed_.find(request.template_name); it != keyed_.end() && !it->second.empty()) {
        resp.text = std::move(it->second.front());
        it->second.pop_front();
        return resp;
    }
    if (!queue_.empty()) {
        resp.text = std::move(queue_.front());
        queue_.pop_front();
        return resp;
    }
    if (rule_) {
        if (auto text = rule_(request)) {
            resp.text = std::move(*text);
            return resp;
        }
    }
    if (strict_) throw ScriptMismatch("no scripted completion for template '" + request.template_name + "'");
    resp.text = fallback_.value_or("");
    return resp;
}

// +-----------------------------------+
// |             LlmClient             |
// +-----------------------------------+

LlmClient::LlmClient(Provider& provider, RetryPolicy policy, ReplayLog* log)
    : provider_(provider),
      policy_(policy),
      log_(log),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
      clock_(wall_clock_ms) {}

ProviderResponse LlmClient::complete(const ProviderRequest& request) {
    if (request.prompt.empty()) throw ParameterError("prompt must be non-empty");
    const int attempts = std::max(1, policy_.attempts);
    std::string last_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) sleeper_(policy_.base_delay * (1 << (attempt - 1)));
        try {
            const auto start = std::chrono::steady_clock::now();
            auto resp = provider_.complete(request);
            if (resp.latency_ms == 0) {
                resp.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                      std::chrono::steady_clock::now() - start)
                                      .count();
            }
            if (log_ != nullptr) {
                log_->append(ReplayRecord{request.template_name, request.prompt, resp.text, clock_()});
            }
            return resp;
        } catch (const TransientProviderError& e) {
            last_error = e.what();
        }
    }
    throw ProviderUnavailable("provider '" + provider_.id() + "' unavailable after " +
                              std::to_string(attempts) + " attempts: " + last_error);
}

ProviderResponse LlmClient::complete(const PromptTemplate& tmpl, const Bindings& bindings, int max_output_hint) {
    return complete(ProviderRequest{tmpl.name(), render(tmpl, bindings), max_output_hint});
}

// +-----------------------------------+
// |        Structured outputs         |
// +-----------------------------------+

std::string extract_answer(std::string_view text) {
    const auto pos = text.rfind(kAnswerMarker);
    if (pos == std::string_view::npos) return trim(text);
    return trim(text.substr(pos + kAnswerMarker.size()));
}

std::vector<std::string> parse_lines(std::string_view text, std::optional<std::size_t> expected_count) {
    std::vector<std::string> out;
    for (const auto& raw : split_lines(text)) {
        auto line = trim(raw);
        if (line.empty()) continue;
        line = strip_numbering(line);
        if (!line.empty()) out.push_back(std::move(line));
    }
    if (expected_count && out.size() != *expected_count) {
        throw ParseError("expected " + std::to_string(*expected_count) + " lines, got " +
                             std::to_string(out.size()),
                         std::string(text));
    }
    return out;
}

std::string_view to_string(SubTopicStatus s) {
    switch (s) {
        case SubTopicStatus::NotDiscussed: return "not discussed";
        case SubTopicStatus::BeingDiscussed: return "being discussed";
        case SubTopicStatus::WellDiscussed: return "well discussed";
    }
    return "not discussed";
}

std::optional<SubTopicStatus> parse_status(std::string_view label) {
    std::string norm;
    for (char c : to_lower(trim(label))) {
        if (c == '_' || c == '-') c = ' ';
        if (c == ' ' && (norm.empty() || norm.back() == ' ')) continue;
        norm += c;
    }
    while (!norm.empty() && (norm.back() == '.' || norm.back() == ' ')) norm.pop_back();
    if (norm == "not discussed") return SubTopicStatus::NotDiscussed;
    if (norm == "being discussed") return SubTopicStatus::BeingDiscussed;
    if (norm == "well discussed") return SubTopicStatus::WellDiscussed;
    return std::nullopt;
}

std::map<int, SubTopicStatus> parse_status_labels(std::string_view text, const std::vector<SubTopic>& subtopics) {
    if (subtopics.empty()) throw ParameterError("parse_status_labels needs at least one sub-topic");
    std::map<int, SubTopicStatus> out;
    for (const auto& raw : split_lines(text)) {
        const auto line = trim(raw);
        const auto colon = line.find(':');
        if (line.empty() || colon == std::string::npos) continue;
        auto key = trim(std::string_view(line).substr(0, colon));
        const auto label = std::string_view(line).substr(colon + 1);

        std::optional<int> index;
        int parsed = 0;
        const auto digits = strip_numbering(key);
        auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), parsed);
        if (ec == std::errc() && ptr == key.data() + key.size()) {
            index = parsed;
        } else {
            for (const auto& st : subtopics) {
                if (to_lower(st.title) == to_lower(key) || to_lower(st.title) == to_lower(digits)) {
                    index = st.index;
                }
            }
        }
        const bool known = index && std::any_of(subtopics.begin(), subtopics.end(),
                                                [&](const SubTopic& s) { return s.index == *index; });
        if (!known) throw ParseError("unknown sub-topic '" + key + "'", std::string(text));
        const auto status = parse_status(label);
        if (!status) throw ParseError("unrecognized status label '" + trim(label) + "'", std::string(text));
        out[*index] = *status;
    }
    return out;
}

}  // namespace muca
