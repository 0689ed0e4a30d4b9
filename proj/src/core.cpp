#include "muca/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace muca {

namespace {

constexpr std::array<std::string_view, kStrategyCount> kStrategyNames = {
    "DirectChatting",     "InitiativeSummarization", "ParticipationEncouragement",
    "SubTopicTransition", "ConflictResolution",      "InContextChimeIn",
    "KeepSilent",
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string_view to_string(Profile p) { return p == Profile::Small ? "small" : "medium"; }

Profile parse_profile(std::string_view s) {
    const auto lower = to_lower(s);
    if (lower == "small") return Profile::Small;
    if (lower == "medium") return Profile::Medium;
    throw ConfigError("unknown profile '" + std::string(s) + "' (expected small|medium)");
}

std::string_view to_string(StrategyKind k) { return kStrategyNames[strategy_slot(k)]; }

std::optional<StrategyKind> parse_strategy(std::string_view s) {
    for (auto k : kAllStrategies) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

ArbitrationParams ArbitrationParams::for_participants(int participants) {
    ArbitrationParams p;
    const int P = participants;
    p.warmup_summarization = 11 * P;
    p.cooldown_summarization = 12 * P;
    p.warmup_encouragement = 3 * P;
    p.warmup_transition = 5 * P;
    p.cooldown_transition = 7 * P;
    p.warmup_conflict = 9 * P;
    p.conflict_stall_window = 9 * P;
    p.n_active_required = (P + 1) / 2;
    return p;
}

void ArbitrationParams::validate() const {
    for (double t : {thre_freq_lt, thre_len_lt, thre_freq_st, thre_len_st, silence_alpha, semantic_beta,
                     chime_threshold}) {
        if (!(t > 0.0)) throw ConfigError("arbitration thresholds must be > 0");
    }
    if (!(chime_threshold < 1.0)) throw ConfigError("chime_threshold must lie in (0, 1)");
    for (int v : {warmup_summarization, cooldown_summarization, warmup_encouragement,
                  encouragement_cooldown_increment, warmup_transition, cooldown_transition,
                  warmup_conflict, conflict_stall_window, n_active_required}) {
        if (v < 0) throw ConfigError("warm-up and cool-down values must be non-negative");
    }
}

void SessionConfig::validate() const {
    if (trim(inputs.topic).empty()) throw ConfigError("topic must be non-empty");
    if (participants < 2) throw ConfigError("participant count must be at least 2");
    if (n_exe < 1) throw ConfigError("n_exe must be at least 1");
    if (n_sw < 1) throw ConfigError("n_sw must be at least 1");
    if (n_lw != 10 * n_sw) throw ConfigError("n_lw must equal 10 * n_sw");
    if (subtopic_count < 2 || subtopic_count > 6) throw ConfigError("subtopic_count must lie in [2, 6]");
    if (trim(bot_keyword).empty()) throw ConfigError("bot_keyword must be non-empty");
    if (trim(bot_name).empty()) throw ConfigError("bot_name must be non-empty");
    arbitration.validate();
}

SessionConfig derive_config(int participants, Profile profile, TopicInputs inputs) {
    if (participants < 2) throw ConfigError("participant count must be at least 2");
    if (trim(inputs.topic).empty()) throw ConfigError("topic must be non-empty");

    SessionConfig c;
    c.inputs = std::move(inputs);
    c.profile = profile;
    c.participants = participants;
    if (profile == Profile::Small) {
        c.n_sw = 8;
        c.n_exe = 3;
    } else {
        c.n_sw = 2 * participants;
        c.n_exe = std::max(1, static_cast<int>(std::floor(0.75 * participants + 0.5)));
    }
    c.n_lw = 10 * c.n_sw;
    c.arbitration = ArbitrationParams::for_participants(participants);
    return c;
}

std::string_view to_string(UtteranceKind k) {
    switch (k) {
        case UtteranceKind::Human: return "human";
        case UtteranceKind::Bot: return "bot";
        case UtteranceKind::System: return "system";
    }
    return "human";
}

UtteranceKind parse_utterance_kind(std::string_view s) {
    if (s == "human") return UtteranceKind::Human;
    if (s == "bot") return UtteranceKind::Bot;
    if (s == "system") return UtteranceKind::System;
    throw ParameterError("unknown utterance kind '" + std::string(s) + "'");
}

std::size_t count_words(std::string_view text) {
    std::size_t n = 0;
    bool in_token = false;
    for (char c : text) {
        if (is_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++n;
        }
    }
    return n;
}

std::span<const Utterance> window(std::span<const Utterance> transcript, std::size_t n) {
    const auto take = std::min(n, transcript.size());
    return transcript.subspan(transcript.size() - take, take);
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

bool contains_icase(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return false;
    return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

std::string format_window(std::span<const Utterance> utterances) {
    std::ostringstream os;
    for (const auto& u : utterances) {
        os << '[' << u.id << "] " << u.sender << ": " << u.text << '\n';
    }
    return os.str();
}

}  // namespace muca
