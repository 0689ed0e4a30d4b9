#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace muca {

// Error hierarchy shared by every module.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

enum class Profile { Small, Medium };

std::string_view to_string(Profile p);
Profile parse_profile(std::string_view s);

/// Strategies in default rank order (DirectChatting = 1 ... KeepSilent = 7).
enum class StrategyKind : int {
    DirectChatting = 1,
    InitiativeSummarization = 2,
    ParticipationEncouragement = 3,
    SubTopicTransition = 4,
    ConflictResolution = 5,
    InContextChimeIn = 6,
    KeepSilent = 7,
};

inline constexpr std::size_t kStrategyCount = 7;

inline constexpr std::array<StrategyKind, kStrategyCount> kAllStrategies = {
    StrategyKind::DirectChatting,         StrategyKind::InitiativeSummarization,
    StrategyKind::ParticipationEncouragement, StrategyKind::SubTopicTransition,
    StrategyKind::ConflictResolution,     StrategyKind::InContextChimeIn,
    StrategyKind::KeepSilent,
};

constexpr int default_rank(StrategyKind k) { return static_cast<int>(k); }
constexpr std::size_t strategy_slot(StrategyKind k) { return static_cast<std::size_t>(k) - 1; }

std::string_view to_string(StrategyKind k);
std::optional<StrategyKind> parse_strategy(std::string_view s);

/// Tunable arbitration thresholds. Warm-ups and cool-downs are counted in
/// human utterances and are already evaluated for a participant count.
struct ArbitrationParams {
    double thre_freq_lt = 0.4;
    double thre_len_lt = 0.4;
    double thre_freq_st = 1.0;
    double thre_len_st = 5.0;
    double silence_alpha = 0.2;
    double semantic_beta = 0.4;
    double chime_threshold = 0.45;

    int warmup_summarization = 0;
    int cooldown_summarization = 0;
    int warmup_encouragement = 0;
    int encouragement_cooldown_increment = 2;
    int warmup_transition = 0;
    int cooldown_transition = 0;
    int warmup_conflict = 0;
    int conflict_stall_window = 0;
    int n_active_required = 1;

    // Rank per strategy slot; lower wins. Defaults to the fixed order 1..7.
    std::array<int, kStrategyCount> ranks = {1, 2, 3, 4, 5, 6, 7};

    static ArbitrationParams for_participants(int participants);

    int rank(StrategyKind k) const { return ranks[strategy_slot(k)]; }
    void validate() const;
};

struct TopicInputs {
    std::string topic;
    std::vector<std::string> agenda;
    std::string hints;
    std::string attendee_roles;
};

struct SessionConfig {
    TopicInputs inputs;
    Profile profile = Profile::Small;
    int participants = 0;
    int n_exe = 0;
    int n_sw = 0;
    int n_lw = 0;
    int subtopic_count = 3;
    std::string bot_keyword = "@mubot";
    std::string bot_name = "MUCA";
    ArbitrationParams arbitration;
    std::optional<std::uint64_t> random_seed;

    void validate() const;
};

/// Builds a configuration from the participant count and a sizing profile.
/// small: n_sw = 8, n_exe = 3. medium: n_sw = 2P, n_exe = round(0.75P).
/// n_lw is always 10 * n_sw.
SessionConfig derive_config(int participants, Profile profile, TopicInputs inputs);

enum class UtteranceKind { Human, Bot, System };

std::string_view to_string(UtteranceKind k);
UtteranceKind parse_utterance_kind(std::string_view s);

struct Utterance {
    std::int64_t id = 0;
    std::string sender;
    UtteranceKind kind = UtteranceKind::Human;
    std::string text;
    std::size_t word_count = 0;
    std::int64_t timestamp_ms = 0;

    bool operator==(const Utterance&) const = default;
};

using Transcript = std::vector<Utterance>;

struct SubTopic {
    int index = 0;
    std::string title;

    bool operator==(const SubTopic&) const = default;
};

/// Non-fatal problems collected while running a pipeline stage.
struct Diagnostics {
    std::vector<std::string> warnings;

    void warn(std::string message) { warnings.push_back(std::move(message)); }
};

/// Number of maximal whitespace-separated tokens.
std::size_t count_words(std::string_view text);

/// The last min(n, size) utterances, in order.
std::span<const Utterance> window(std::span<const Utterance> transcript, std::size_t n);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool contains_icase(std::string_view haystack, std::string_view needle);

/// "[id] sender: text" lines, one per utterance.
std::string format_window(std::span<const Utterance> utterances);

}  // namespace muca
