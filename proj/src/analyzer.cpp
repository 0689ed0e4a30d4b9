#include "muca/analyzer.hpp"

#include "muca/prompts.hpp"
#include "muca/subtopics.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace muca {

namespace {

bool is_human(const Utterance& u) { return u.kind == UtteranceKind::Human; }

bool has_dialogue(std::span<const Utterance> window) {
    return std::any_of(window.begin(), window.end(),
                       [](const Utterance& u) { return u.kind != UtteranceKind::System; });
}

std::vector<std::string> human_speakers(std::span<const Utterance> window) {
    std::vector<std::string> out;
    for (const auto& u : window) {
        if (is_human(u) && std::find(out.begin(), out.end(), u.sender) == out.end()) out.push_back(u.sender);
    }
    return out;
}

std::optional<int> leading_index(std::string_view line, std::size_t& rest) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
    if (ec != std::errc() || ptr == line.data()) return std::nullopt;
    std::size_t pos = static_cast<std::size_t>(ptr - line.data());
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '.' || line[pos] == ')')) ++pos;
    if (pos >= line.size() || line[pos] != ':') return std::nullopt;
    rest = pos + 1;
    return value;
}

// "<index>: <summary>" lines for known sub-topics.
std::map<int, std::string> parse_topic_summaries(std::string_view answer, const SubTopicState& state) {
    std::map<int, std::string> out;
    std::istringstream in{std::string(answer)};
    std::string line;
    while (std::getline(in, line)) {
        const auto t = trim(line);
        std::size_t rest = 0;
        auto idx = leading_index(t, rest);
        if (!idx) continue;
        const bool known = std::any_of(state.subtopics.begin(), state.subtopics.end(),
                                       [&](const SubTopic& s) { return s.index == *idx; });
        if (known) out[*idx] = trim(std::string_view(t).substr(rest));
    }
    return out;
}

}  // namespace

SubTopicState SubTopicState::initial(std::vector<SubTopic> subtopics) {
    SubTopicState s;
    s.entries.resize(subtopics.size());
    s.subtopics = std::move(subtopics);
    return s;
}

const SubTopicEntry& SubTopicState::entry(int index) const {
    for (std::size_t i = 0; i < subtopics.size(); ++i) {
        if (subtopics[i].index == index) return entries[i];
    }
    throw ParameterError("unknown sub-topic index " + std::to_string(index));
}

SubTopicEntry& SubTopicState::entry(int index) {
    return const_cast<SubTopicEntry&>(std::as_const(*this).entry(index));
}

const SubTopic& SubTopicState::subtopic(int index) const {
    for (const auto& s : subtopics) {
        if (s.index == index) return s;
    }
    throw ParameterError("unknown sub-topic index " + std::to_string(index));
}

int SubTopicState::well_discussed_count() const {
    return static_cast<int>(std::count_if(entries.begin(), entries.end(), [](const SubTopicEntry& e) {
        return e.status == SubTopicStatus::WellDiscussed;
    }));
}

const ParticipantFeatures* ParticipantStats::find(const std::string& name) const {
    for (const auto& p : participants) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

std::pair<double, double> mean_and_sample_variance(std::span<const double> values) {
    if (values.empty()) return {0.0, 0.0};
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, ss / static_cast<double>(values.size() - 1)};
}

SubTopicState update_subtopic_status(const SubTopicState& state, const SessionConfig& config,
                                     std::span<const Utterance> short_window, LlmClient& client,
                                     Diagnostics& diag) {
    if (!has_dialogue(short_window) || state.subtopics.empty()) return state;

    SubTopicState next = state;
    std::ostringstream prev_summaries;
    for (std::size_t i = 0; i < state.subtopics.size(); ++i) {
        prev_summaries << state.subtopics[i].index << ": "
                       << (state.entries[i].summary.empty() ? "(none yet)" : state.entries[i].summary) << '\n';
    }
    const auto window_text = format_window(short_window);
    const auto subtopic_text = format_subtopics(state.subtopics);

    try {
        const auto resp = client.complete(prompts::topic_summary(), {{"topic", config.inputs.topic},
                                                                     {"subtopics", subtopic_text},
                                                                     {"previous_summaries", prev_summaries.str()},
                                                                     {"window", window_text}});
        for (auto& [idx, text] : parse_topic_summaries(extract_answer(resp.text), state)) {
            if (!text.empty()) next.entry(idx).summary = std::move(text);
        }
    } catch (const ProviderUnavailable& e) {
        diag.warn(std::string("topic summary update skipped: ") + e.what());
        return state;
    }

    std::ostringstream summaries;
    for (std::size_t i = 0; i < next.subtopics.size(); ++i) {
        summaries << next.subtopics[i].index << ": "
                  << (next.entries[i].summary.empty() ? "(none yet)" : next.entries[i].summary) << '\n';
    }
    try {
        const auto resp = client.complete(prompts::subtopic_status(), {{"subtopics", subtopic_text},
                                                                       {"prev_status", format_statuses(state)},
                                                                       {"topic_summaries", summaries.str()},
                                                                       {"window", window_text}});
        const auto labels = parse_status_labels(extract_answer(resp.text), state.subtopics);
        for (const auto& [idx, status] : labels) {
            auto& e = next.entry(idx);
            e.status = std::max(e.status, status);
        }
    } catch (const ParseError& e) {
        diag.warn(std::string("sub-topic statuses unchanged: ") + e.what());
    } catch (const ProviderUnavailable& e) {
        diag.warn(std::string("sub-topic statuses unchanged: ") + e.what());
    }
    return next;
}

std::vector<int> extract_discussed_subtopics(const std::vector<SubTopic>& subtopics,
                                             std::span<const Utterance> short_window, LlmClient& client,
                                             Diagnostics& diag) {
    if (subtopics.empty()) throw ParameterError("extract_discussed_subtopics needs at least one sub-topic");
    if (!has_dialogue(short_window)) return {};

    std::string answer;
    try {
        const auto resp = client.complete(prompts::discussed_subtopics(),
                                          {{"subtopics", format_subtopics(subtopics)},
                                           {"window", format_window(short_window)}});
        answer = extract_answer(resp.text);
    } catch (const ProviderUnavailable& e) {
        diag.warn(std::string("discussed sub-topics unavailable: ") + e.what());
        return {};
    }

    std::set<int> found;
    for (const auto& line : parse_lines(answer)) {
        const auto lower = to_lower(line);
        if (lower == "none" || lower == "none.") continue;
        std::optional<int> match;
        for (const auto& st : subtopics) {
            const auto title = to_lower(st.title);
            if (lower == title || lower.find(title) != std::string::npos || lower == std::to_string(st.index)) {
                match = st.index;
                break;
            }
        }
        if (match) {
            found.insert(*match);
        } else {
            diag.warn("dropped unknown sub-topic '" + line + "'");
        }
    }
    return {found.begin(), found.end()};
}

void attribute_speakers(SubTopicState& state, const std::vector<int>& discussed,
                        std::span<const Utterance> short_window, int cycle) {
    std::int64_t max_id = state.last_attributed_id;
    for (const auto& u : short_window) max_id = std::max(max_id, u.id);
    if (!discussed.empty()) {
        const auto speakers = human_speakers(short_window);
        for (int idx : discussed) {
            auto& e = state.entry(idx);
            e.ever_discussed.insert(speakers.begin(), speakers.end());
            if (!speakers.empty() && !e.first_discussed_cycle) e.first_discussed_cycle = cycle;
        }
        for (const auto& u : short_window) {
            if (!is_human(u) || u.id <= state.last_attributed_id) continue;
            for (int idx : discussed) ++state.interest[u.sender][idx];
        }
    }
    state.last_attributed_id = max_id;
}

AccumulativeSummary update_accumulative_summary(const AccumulativeSummary& summary,
                                                const std::vector<SubTopic>& subtopics,
                                                const std::vector<int>& discussed,
                                                std::span<const Utterance> short_window, LlmClient& client,
                                                int cycle, Diagnostics& diag) {
    if (discussed.empty()) return summary;
    const auto speakers = human_speakers(short_window);
    if (speakers.empty()) return summary;

    AccumulativeSummary next = summary;
    const auto window_text = format_window(short_window);
    for (const auto& speaker : speakers) {
        for (int idx : discussed) {
            const auto title = std::find_if(subtopics.begin(), subtopics.end(),
                                            [&](const SubTopic& s) { return s.index == idx; });
            if (title == subtopics.end()) continue;
            const auto key = std::make_pair(speaker, idx);
            const auto prev = summary.cells.find(key);
            try {
                const auto resp = client.complete(
                    prompts::accumulative_summary(),
                    {{"participant", speaker},
                     {"subtopic", title->title},
                     {"previous_summary", prev == summary.cells.end() ? std::string("(none yet)") : prev->second},
                     {"window", window_text}});
                auto text = extract_answer(resp.text);
                if (text.empty()) {
                    diag.warn("empty summary merge for " + speaker + " on '" + title->title + "'");
                    continue;
                }
                next.cells[key] = std::move(text);
            } catch (const ProviderUnavailable& e) {
                diag.warn(std::string("summary merge failed: ") + e.what());
            }
        }
    }
    next.last_updated_cycle = cycle;
    return next;
}

ParticipantStats extract_participant_stats(std::span<const Utterance> conversation, const SessionConfig& config,
                                           const std::vector<int>& discussed, const SubTopicState& state,
                                           std::span<const std::string> roster) {
    std::vector<std::string> names(roster.begin(), roster.end());
    for (const auto& u : conversation) {
        if (is_human(u) && std::find(names.begin(), names.end(), u.sender) == names.end()) {
            names.push_back(u.sender);
        }
    }

    ParticipantStats stats;
    for (const auto& name : names) {
        ParticipantFeatures f;
        f.name = name;
        if (auto it = state.interest.find(name); it != state.interest.end()) f.interest = it->second;
        stats.participants.push_back(std::move(f));
    }
    auto tally = [&](std::span<const Utterance> w, bool short_term) {
        for (const auto& u : w) {
            if (!is_human(u)) continue;
            for (auto& f : stats.participants) {
                if (f.name != u.sender) continue;
                const int words = static_cast<int>(u.word_count);
                if (short_term) {
                    ++f.freq_st;
                    f.len_st += words;
                } else {
                    ++f.freq_lt;
                    f.len_lt += words;
                }
            }
        }
    };
    tally(window(conversation, static_cast<std::size_t>(config.n_sw)), true);
    tally(window(conversation, static_cast<std::size_t>(config.n_lw)), false);

    std::vector<double> freq;
    std::vector<double> len;
    for (const auto& f : stats.participants) {
        freq.push_back(f.freq_lt);
        len.push_back(f.len_lt);
    }
    std::tie(stats.mean_freq_lt, stats.var_freq_lt) = mean_and_sample_variance(freq);
    std::tie(stats.mean_len_lt, stats.var_len_lt) = mean_and_sample_variance(len);

    const auto short_speakers = human_speakers(window(conversation, static_cast<std::size_t>(config.n_sw)));
    for (std::size_t i = 0; i < state.subtopics.size(); ++i) {
        const int idx = state.subtopics[i].index;
        const auto& ever = state.entries[i].ever_discussed;
        stats.n_ed[idx] = static_cast<int>(ever.size());
        int ing = 0;
        if (std::find(discussed.begin(), discussed.end(), idx) != discussed.end()) {
            for (const auto& s : short_speakers) ing += ever.contains(s) ? 1 : 0;
        }
        stats.n_ing[idx] = ing;
    }
    return stats;
}

std::string format_statuses(const SubTopicState& state) {
    std::ostringstream os;
    for (std::size_t i = 0; i < state.subtopics.size(); ++i) {
        os << state.subtopics[i].index << ": " << to_string(state.entries[i].status) << '\n';
    }
    return os.str();
}

std::string format_summary(const AccumulativeSummary& summary, const std::vector<SubTopic>& subtopics) {
    if (summary.cells.empty()) return "(no summary yet)\n";
    std::ostringstream os;
    for (const auto& st : subtopics) {
        for (const auto& [key, text] : summary.cells) {
            if (key.second == st.index) os << '[' << st.title << "] " << key.first << ": " << text << '\n';
        }
    }
    return os.str();
}

std::string format_discussed(const std::vector<int>& discussed, const std::vector<SubTopic>& subtopics) {
    std::string out;
    for (int idx : discussed) {
        for (const auto& s : subtopics) {
            if (s.index != idx) continue;
            if (!out.empty()) out += "; ";
            out += s.title;
        }
    }
    return out.empty() ? "none" : out;
}

}  // namespace muca
