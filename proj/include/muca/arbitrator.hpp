#pragma once

#include "muca/analyzer.hpp"
#include "muca/core.hpp"
#include "muca/llm.hpp"

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace muca {

/// Arbitration bookkeeping. All indices count human utterances since the
/// session started.
struct TriggerState {
    struct PingCooldown {
        int cooldown = 0;
        std::optional<int> last_pinged;

        bool operator==(const PingCooldown&) const = default;
    };

    int utterance_index = 0;
    std::map<StrategyKind, int> last_fired;
    std::map<std::string, PingCooldown> encouragement;
    int n_silent = 0;
    std::vector<std::pair<int, int>> n_well_history;  // (utterance_index, well-discussed count)
    std::set<std::string> active_since_last_summary;

    bool operator==(const TriggerState&) const = default;
};

struct ChimeInSignals {
    int b_stuck = 0;
    int b_unsolve = 0;
    int n_silent = 0;
};

struct ChimeInResult {
    double p_silence = 0.0;
    double p_semantic = 0.0;
    double p_chime = 0.0;
    bool fire = false;
};

enum class TransitionHint { AskInterest, ProposeNext };

std::string_view to_string(TransitionHint h);

struct StrategyCheck {
    StrategyKind strategy = StrategyKind::KeepSilent;
    bool triggered = false;
    bool gated = false;
    std::string detail;

    bool eligible() const { return triggered && gated; }
};

/// Condition and gate results for all seven strategies in one cycle.
struct ConditionSet {
    std::array<StrategyCheck, kStrategyCount> checks;
    std::optional<std::string> encouragement_target;
    std::optional<TransitionHint> transition_hint;
    std::optional<int> focal_subtopic;
    ChimeInSignals chime_signals;
    ChimeInResult chime;

    ConditionSet();
    StrategyCheck& at(StrategyKind k) { return checks[strategy_slot(k)]; }
    const StrategyCheck& at(StrategyKind k) const { return checks[strategy_slot(k)]; }
};

struct StrategyDecision {
    StrategyKind chosen = StrategyKind::KeepSilent;
    std::vector<StrategyCheck> eligible_set;
    std::optional<std::string> target;
    std::optional<TransitionHint> hint;
    std::optional<int> focal_subtopic;
    ChimeInSignals chime_signals;
    ChimeInResult chime;
    std::string response;
    int cycle = 0;
};

// +-----------------------------------+
// |        Trigger conditions         |
// +-----------------------------------+

bool detect_direct_ping(std::string_view text, std::string_view bot_keyword);

/// Participants whose long-window frequency and length are both far below
/// the mean (variance ratio above threshold and below the mean) and who are
/// near-silent in the short window. Zero variance in either feature flags
/// nobody.
std::vector<std::string> detect_lurkers(const ParticipantStats& stats, const ArbitrationParams& params);

double silence_probability(int n_silent, double alpha);
double semantic_probability(int b_stuck, int b_unsolve, double beta);
ChimeInResult chime_in_decision(const ChimeInSignals& signals, const ArbitrationParams& params);

/// Provider-labelled stuck/unsolved flags. Anything unparseable is (0, 0).
ChimeInSignals classify_stuck_unsolved(std::span<const Utterance> short_window, LlmClient& client,
                                       std::string_view bot_name, Diagnostics& diag);

/// N_ed < P/2 -> AskInterest; N_ed >= P/2 and N_ing < N_ed/2 -> ProposeNext.
std::optional<TransitionHint> subtopic_transition_condition(int n_ed, int n_ing, int participants);

/// True iff the well-discussed count has not increased over the last
/// `stall_window` human utterances. Sessions younger than the window never
/// trigger.
bool conflict_resolution_condition(std::span<const std::pair<int, int>> n_well_history, int utterance_index,
                                   int stall_window);

bool initiative_summarization_condition(const std::set<std::string>& active_since_last_summary,
                                        const ArbitrationParams& params);

/// Being-discussed sub-topic with the most participants ever on it; ties go
/// to the lowest index. Falls back to T_d when no status says "being".
std::optional<int> focal_subtopic(const SubTopicState& state, const std::vector<int>& discussed,
                                  const ParticipantStats& stats);

// +-----------------------------------+
// |        Gating and ranking         |
// +-----------------------------------+

int warmup(StrategyKind k, const ArbitrationParams& params);
int cooldown(StrategyKind k, const ArbitrationParams& params);

/// Warm-up / cool-down gate. Participation Encouragement additionally checks
/// the target's personal cool-down when a target is given.
bool gate(StrategyKind k, const TriggerState& state, const ArbitrationParams& params,
          const std::optional<std::string>& target = std::nullopt);

/// Minimum-rank strategy among the triggered and gated ones; KeepSilent when
/// none. DirectChatting, when triggered, always wins.
StrategyDecision arbitrate(const ConditionSet& conditions, const ArbitrationParams& params);

/// Everything the condition evaluation needs from the analyzer for one cycle.
struct CycleSignals {
    const SessionConfig* config = nullptr;
    const SubTopicState* subtopics = nullptr;
    const std::vector<int>* discussed = nullptr;
    const ParticipantStats* stats = nullptr;
    ChimeInSignals chime_signals;
    bool pinged = false;
};

ConditionSet evaluate_conditions(const CycleSignals& signals, const TriggerState& state);

/// Applies the bookkeeping for a decision: last-fired index, personal
/// cool-down growth, silence counter, summarization speaker reset.
void commit_decision(TriggerState& state, const StrategyDecision& decision, const ArbitrationParams& params);

// +-----------------------------------+
// |        Response generation        |
// +-----------------------------------+

struct ResponseContext {
    const SessionConfig* config = nullptr;
    const SubTopicState* subtopics = nullptr;
    const AccumulativeSummary* summary = nullptr;
    const std::vector<int>* discussed = nullptr;
    const ParticipantStats* stats = nullptr;
    std::span<const Utterance> short_window;
    const Utterance* last_utterance = nullptr;
};

std::string format_topic_info(const TopicInputs& inputs);

/// Natural-language status of a quiet participant, built from their window
/// features and per-sub-topic interest counts.
std::string describe_inactive_participant(const ParticipantFeatures& features, const SessionConfig& config,
                                          const SubTopicState& state);

/// Renders and runs the chosen strategy's template. Returns an empty string
/// (caller downgrades to KeepSilent) when the provider fails or answers
/// with nothing.
std::string generate_response(const StrategyDecision& decision, const ResponseContext& ctx, LlmClient& client,
                              Diagnostics& diag);

}  // namespace muca
