#pragma once

#include "muca/core.hpp"
#include "muca/llm.hpp"

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace muca {

struct SubTopicEntry {
    SubTopicStatus status = SubTopicStatus::NotDiscussed;
    std::string summary;
    std::set<std::string> ever_discussed;
    std::optional<int> first_discussed_cycle;

    bool operator==(const SubTopicEntry&) const = default;
};

/// Per-sub-topic status, topic summary and the participants ever attributed
/// to it. Statuses only move forward: not -> being -> well.
struct SubTopicState {
    std::vector<SubTopic> subtopics;
    std::vector<SubTopicEntry> entries;  // parallel to subtopics
    // participant -> sub-topic index -> attributed utterance count
    std::map<std::string, std::map<int, int>> interest;
    std::int64_t last_attributed_id = 0;

    static SubTopicState initial(std::vector<SubTopic> subtopics);

    const SubTopicEntry& entry(int index) const;
    SubTopicEntry& entry(int index);
    const SubTopic& subtopic(int index) const;
    int well_discussed_count() const;

    bool operator==(const SubTopicState&) const = default;
};

/// Memory of each participant's contributions per sub-topic.
struct AccumulativeSummary {
    std::map<std::pair<std::string, int>, std::string> cells;
    int last_updated_cycle = -1;

    bool operator==(const AccumulativeSummary&) const = default;
};

struct ParticipantFeatures {
    std::string name;
    int freq_st = 0;
    int freq_lt = 0;
    int len_st = 0;
    int len_lt = 0;
    std::map<int, int> interest;
};

struct ParticipantStats {
    std::vector<ParticipantFeatures> participants;
    double mean_freq_lt = 0.0;
    double var_freq_lt = 0.0;
    double mean_len_lt = 0.0;
    double var_len_lt = 0.0;
    std::map<int, int> n_ed;   // sub-topic index -> participants ever on it
    std::map<int, int> n_ing;  // sub-topic index -> participants on it in the short window

    const ParticipantFeatures* find(const std::string& name) const;
};

/// Sample mean and (n - 1) variance. Fewer than two values give variance 0.
std::pair<double, double> mean_and_sample_variance(std::span<const double> values);

/// Two-stage update: topic summaries first, then status labels. An empty
/// window leaves the state untouched without calling the provider. Parse or
/// provider failures keep the previous statuses and add a warning.
SubTopicState update_subtopic_status(const SubTopicState& state, const SessionConfig& config,
                                     std::span<const Utterance> short_window, LlmClient& client,
                                     Diagnostics& diag);

/// Indices of the sub-topics being discussed in the window (T_d). Titles the
/// provider names that are not sub-topics are dropped with a warning.
std::vector<int> extract_discussed_subtopics(const std::vector<SubTopic>& subtopics,
                                             std::span<const Utterance> short_window, LlmClient& client,
                                             Diagnostics& diag);

/// Attributes the human speakers of the window to every sub-topic in
/// `discussed`, and counts their not-yet-attributed utterances as interest.
void attribute_speakers(SubTopicState& state, const std::vector<int>& discussed,
                        std::span<const Utterance> short_window, int cycle);

/// One provider merge per (window speaker, discussed sub-topic) cell. Cells
/// that are not touched, or whose merge fails, are kept verbatim.
AccumulativeSummary update_accumulative_summary(const AccumulativeSummary& summary,
                                                const std::vector<SubTopic>& subtopics,
                                                const std::vector<int>& discussed,
                                                std::span<const Utterance> short_window, LlmClient& client,
                                                int cycle, Diagnostics& diag);

/// Pure statistics over the short (n_sw) and long (n_lw) windows of the
/// conversation. Only human utterances are counted. `roster` adds
/// participants who have not spoken yet.
ParticipantStats extract_participant_stats(std::span<const Utterance> conversation, const SessionConfig& config,
                                           const std::vector<int>& discussed, const SubTopicState& state,
                                           std::span<const std::string> roster = {});

std::string format_statuses(const SubTopicState& state);
std::string format_summary(const AccumulativeSummary& summary, const std::vector<SubTopic>& subtopics);
std::string format_discussed(const std::vector<int>& discussed, const std::vector<SubTopic>& subtopics);

}  // namespace muca
