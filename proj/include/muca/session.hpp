#pragma once

#include "muca/analyzer.hpp"
#include "muca/arbitrator.hpp"
#include "muca/core.hpp"
#include "muca/llm.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace muca {

// +-----------------------------------+
// |            Persistence            |
// +-----------------------------------+

/// One pipeline run, as written to the decision trace.
struct DecisionRecord {
    int cycle = 0;
    std::string trigger;  // "periodic" | "ping"
    std::int64_t upto_id = 0;
    int utterance_index = 0;
    std::vector<std::string> roster;
    std::array<StrategyCheck, kStrategyCount> checks;
    StrategyDecision decision;
    std::vector<std::string> warnings;
};

nlohmann::json to_json(const Utterance& u);
Utterance utterance_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DecisionRecord& d);

/// Line-delimited session file: a header record, then utterance and decision
/// records in the order they happened. Every append is flushed; when the
/// file cannot be written, lines are buffered in memory and the error is
/// kept for the operator.
class SessionLog {
public:
    SessionLog() = default;  // in-memory only
    explicit SessionLog(const std::filesystem::path& path);

    void write_header(const SessionConfig& config, const std::vector<SubTopic>& subtopics);
    void append(const Utterance& u);
    void append(const DecisionRecord& d);

    std::vector<std::string> lines() const;
    std::size_t pending_lines() const;
    std::optional<std::string> last_error() const;

private:
    void write_line(std::string line);

    mutable std::mutex mu_;
    std::filesystem::path path_;
    std::ofstream out_;
    std::vector<std::string> lines_;
    std::vector<std::string> pending_;
    std::optional<std::string> error_;
};

struct LoadedSession {
    std::optional<SessionConfig> config;
    std::vector<SubTopic> subtopics;
    Transcript transcript;
    std::vector<nlohmann::json> decisions;
    // Utterance and decision records in file order.
    std::vector<nlohmann::json> records;
};

LoadedSession parse_session_lines(const std::vector<std::string>& lines);
LoadedSession load_session(const std::filesystem::path& path);

// +-----------------------------------+
// |          Session engine           |
// +-----------------------------------+

/// The MUCA pipeline for one chat session. Appends are thread-safe; pipeline
/// runs (`run_cycle`) must come from a single consumer.
class SessionEngine {
public:
    using Clock = std::function<std::int64_t()>;

    struct Ingested {
        Utterance utterance;
        bool ping = false;
        bool cycle_due = false;
    };

    SessionEngine(SessionConfig config, LlmClient& client, SessionLog* log = nullptr, Clock clock = {});

    /// Generates (or adopts) the frozen sub-topics and writes the header.
    /// Must be called once before any utterance.
    void start();
    void start(std::vector<SubTopic> subtopics);

    Utterance append(const std::string& sender, UtteranceKind kind, const std::string& text);
    /// Appends a recorded utterance keeping its id and timestamp.
    void append_recorded(const Utterance& u);

    /// Appends a human utterance and updates the execution counter. Pings do
    /// not touch the counter.
    Ingested ingest_human(const std::string& sender, const std::string& text);
    /// Counter bookkeeping for an utterance that is already in the transcript.
    Ingested observe_human(const Utterance& u);

    /// Runs the analyzer and arbitrator over the transcript prefix ending at
    /// `upto_id`. The bot reply, if any, is in `decision.response`; the
    /// caller appends it.
    DecisionRecord run_cycle(std::int64_t upto_id, bool ping);

    /// Synchronous convenience: ingest, run whatever is due, append replies.
    std::vector<Utterance> process(const std::string& sender, const std::string& text);

    void set_roster(std::vector<std::string> roster);
    std::vector<std::string> roster() const;

    const SessionConfig& config() const { return config_; }
    const std::vector<SubTopic>& subtopics() const { return subtopics_; }
    Transcript transcript() const;
    std::vector<DecisionRecord> decisions() const;
    const SubTopicState& subtopic_state() const { return state_; }
    const AccumulativeSummary& summary() const { return summary_; }
    const TriggerState& trigger_state() const { return trigger_; }
    int pending() const;
    int cycles() const { return cycle_; }

private:
    SessionConfig config_;
    LlmClient& client_;
    SessionLog* log_;
    Clock clock_;
    bool started_ = false;
    std::vector<SubTopic> subtopics_;

    mutable std::mutex mu_;  // guards transcript_, next_id_, pending_, roster_, decisions_
    Transcript transcript_;
    std::int64_t next_id_ = 1;
    int pending_ = 0;
    std::vector<std::string> roster_;
    std::vector<DecisionRecord> decisions_;

    // Owned by the single pipeline consumer.
    SubTopicState state_;
    AccumulativeSummary summary_;
    TriggerState trigger_;
    std::int64_t last_seen_id_ = 0;
    int cycle_ = 0;
};

// +-----------------------------------+
// |              Replay               |
// +-----------------------------------+

struct ReplayOutcome {
    int cycles = 0;
    int recorded_cycles = 0;
    std::vector<std::string> differences;

    bool identical() const { return differences.empty() && cycles == recorded_cycles; }
};

/// Re-runs a persisted session through a fresh engine: utterances are fed
/// back in file order with their recorded ids and timestamps, cycles run
/// where the execution counter or a ping calls for them, and every decision
/// and bot reply is compared with the recorded one. `provider` is normally a
/// strict script built from the session's provider log.
ReplayOutcome replay_session(const LoadedSession& session, Provider& provider);

}  // namespace muca
