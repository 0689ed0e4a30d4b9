#include "muca/session.hpp"

#include "muca/config.hpp"
#include "muca/subtopics.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <iostream>

namespace muca {

using json = nlohmann::json;

namespace {

std::int64_t wall_clock_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

template <typename T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

// +-----------------------------------+
// |            Persistence            |
// +-----------------------------------+

json to_json(const Utterance& u) {
    return {{"record", "utterance"},        {"id", u.id},
            {"sender", u.sender},           {"kind", std::string(to_string(u.kind))},
            {"text", u.text},               {"word_count", u.word_count},
            {"ts", u.timestamp_ms}};
}

Utterance utterance_from_json(const json& j) {
    Utterance u;
    u.id = j.at("id").get<std::int64_t>();
    u.sender = j.at("sender").get<std::string>();
    u.kind = parse_utterance_kind(j.at("kind").get<std::string>());
    u.text = j.at("text").get<std::string>();
    u.word_count = j.value("word_count", count_words(u.text));
    u.timestamp_ms = j.value("ts", std::int64_t{0});
    return u;
}

json to_json(const DecisionRecord& d) {
    json checks = json::array();
    for (const auto& c : d.checks) {
        checks.push_back({{"strategy", std::string(to_string(c.strategy))},
                          {"triggered", c.triggered},
                          {"gated", c.gated},
                          {"detail", c.detail}});
    }
    json eligible = json::array();
    for (const auto& c : d.decision.eligible_set) eligible.push_back(std::string(to_string(c.strategy)));
    const auto& ch = d.decision.chime;
    const auto& sig = d.decision.chime_signals;
    json hint = d.decision.hint ? json(std::string(to_string(*d.decision.hint))) : json(nullptr);
    return {{"record", "decision"},
            {"cycle", d.cycle},
            {"trigger", d.trigger},
            {"upto_id", d.upto_id},
            {"utterance_index", d.utterance_index},
            {"roster", d.roster},
            {"conditions", checks},
            {"eligible", eligible},
            {"chosen", std::string(to_string(d.decision.chosen))},
            {"target", optional_json(d.decision.target)},
            {"hint", hint},
            {"focal_subtopic", optional_json(d.decision.focal_subtopic)},
            {"chime",
             {{"n_silent", sig.n_silent},
              {"b_stuck", sig.b_stuck},
              {"b_unsolve", sig.b_unsolve},
              {"p_silence", ch.p_silence},
              {"p_semantic", ch.p_semantic},
              {"p_chime", ch.p_chime},
              {"fire", ch.fire}}},
            {"response", d.decision.response},
            {"warnings", d.warnings}};
}

SessionLog::SessionLog(const std::filesystem::path& path) : path_(path) {
    out_.open(path, std::ios::out | std::ios::trunc);
    if (!out_) error_ = "cannot open session log '" + path.string() + "'";
}

void SessionLog::write_header(const SessionConfig& config, const std::vector<SubTopic>& subtopics) {
    json subs = json::array();
    for (const auto& s : subtopics) subs.push_back({{"index", s.index}, {"title", s.title}});
    write_line(json{{"record", "session"}, {"config", to_json(config)}, {"subtopics", subs}}.dump());
}

void SessionLog::append(const Utterance& u) { write_line(to_json(u).dump()); }

void SessionLog::append(const DecisionRecord& d) { write_line(to_json(d).dump()); }

void SessionLog::write_line(std::string line) {
    std::lock_guard lock(mu_);
    lines_.push_back(line);
    if (path_.empty()) return;
    pending_.push_back(std::move(line));
    if (!out_.is_open()) {
        out_.clear();
        out_.open(path_, std::ios::out | std::ios::app);
    }
    if (!out_) {
        error_ = "session log '" + path_.string() + "' is not writable; " + std::to_string(pending_.size()) +
                 " record(s) buffered in memory";
        std::cerr << "muca: " << *error_ << '\n';
        return;
    }
    for (const auto& l : pending_) out_ << l << '\n';
    out_.flush();
    if (!out_) {
        error_ = "write to session log '" + path_.string() + "' failed";
        std::cerr << "muca: " << *error_ << '\n';
        out_.close();
        return;
    }
    pending_.clear();
    error_.reset();
}

std::vector<std::string> SessionLog::lines() const {
    std::lock_guard lock(mu_);
    return lines_;
}

std::size_t SessionLog::pending_lines() const {
    std::lock_guard lock(mu_);
    return pending_.size();
}

std::optional<std::string> SessionLog::last_error() const {
    std::lock_guard lock(mu_);
    return error_;
}

LoadedSession parse_session_lines(const std::vector<std::string>& lines) {
    LoadedSession s;
    for (const auto& line : lines) {
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(std::string("malformed session record: ") + e.what());
        }
        const auto kind = j.value("record", std::string());
        if (kind == "session") {
            s.config = session_config_from_json(j.at("config"));
            for (const auto& st : j.at("subtopics")) {
                s.subtopics.push_back(SubTopic{st.at("index").get<int>(), st.at("title").get<std::string>()});
            }
        } else if (kind == "utterance") {
            s.transcript.push_back(utterance_from_json(j));
            s.records.push_back(std::move(j));
        } else if (kind == "decision") {
            s.decisions.push_back(j);
            s.records.push_back(std::move(j));
        }
    }
    return s;
}

LoadedSession load_session(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read session log '" + path.string() + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return parse_session_lines(lines);
}

// +-----------------------------------+
// |          Session engine           |
// +-----------------------------------+

SessionEngine::SessionEngine(SessionConfig config, LlmClient& client, SessionLog* log, Clock clock)
    : config_(std::move(config)), client_(client), log_(log), clock_(clock ? std::move(clock) : wall_clock_ms) {
    config_.validate();
    trigger_.n_well_history.emplace_back(0, 0);
}

void SessionEngine::start() {
    if (started_) throw Error("session already started");
    SubTopicGenerator gen;
    start(gen.generate(config_, client_));
}

void SessionEngine::start(std::vector<SubTopic> subtopics) {
    if (started_) throw Error("session already started");
    started_ = true;
    subtopics_ = std::move(subtopics);
    state_ = SubTopicState::initial(subtopics_);
    if (log_ != nullptr) log_->write_header(config_, subtopics_);
}

Utterance SessionEngine::append(const std::string& sender, UtteranceKind kind, const std::string& text) {
    if (!started_) throw Error("session not started");
    std::lock_guard lock(mu_);
    Utterance u{next_id_++, sender, kind, text, count_words(text), clock_()};
    transcript_.push_back(u);
    if (log_ != nullptr) log_->append(u);
    return u;
}

void SessionEngine::append_recorded(const Utterance& u) {
    if (!started_) throw Error("session not started");
    std::lock_guard lock(mu_);
    if (!transcript_.empty() && u.id <= transcript_.back().id) {
        throw ParameterError("recorded utterance ids must strictly increase");
    }
    transcript_.push_back(u);
    next_id_ = u.id + 1;
    if (log_ != nullptr) log_->append(u);
}

SessionEngine::Ingested SessionEngine::observe_human(const Utterance& u) {
    Ingested r{u, detect_direct_ping(u.text, config_.bot_keyword), false};
    if (r.ping) return r;
    std::lock_guard lock(mu_);
    if (++pending_ >= config_.n_exe) {
        pending_ = 0;
        r.cycle_due = true;
    }
    return r;
}

SessionEngine::Ingested SessionEngine::ingest_human(const std::string& sender, const std::string& text) {
    return observe_human(append(sender, UtteranceKind::Human, text));
}

DecisionRecord SessionEngine::run_cycle(std::int64_t upto_id, bool ping) {
    if (!started_) throw Error("session not started");

    Transcript conversation;
    std::vector<std::string> roster;
    {
        std::lock_guard lock(mu_);
        for (const auto& u : transcript_) {
            if (u.id > upto_id) break;
            if (u.kind != UtteranceKind::System) conversation.push_back(u);
        }
        roster = roster_;
    }

    DecisionRecord rec;
    rec.cycle = ++cycle_;
    rec.trigger = ping ? "ping" : "periodic";
    rec.upto_id = upto_id;
    rec.roster = roster;

    int humans = 0;
    for (const auto& u : conversation) {
        if (u.kind != UtteranceKind::Human) continue;
        ++humans;
        if (u.id > last_seen_id_) trigger_.active_since_last_summary.insert(u.sender);
    }
    last_seen_id_ = std::max(last_seen_id_, upto_id);
    trigger_.utterance_index = humans;
    rec.utterance_index = humans;

    Diagnostics diag;
    const auto short_window = window(conversation, static_cast<std::size_t>(config_.n_sw));

    state_ = update_subtopic_status(state_, config_, short_window, client_, diag);
    const auto discussed = extract_discussed_subtopics(subtopics_, short_window, client_, diag);
    attribute_speakers(state_, discussed, short_window, rec.cycle);
    summary_ = update_accumulative_summary(summary_, subtopics_, discussed, short_window, client_, rec.cycle, diag);
    const auto stats = extract_participant_stats(conversation, config_, discussed, state_, roster);
    trigger_.n_well_history.emplace_back(humans, state_.well_discussed_count());

    CycleSignals signals{&config_, &state_, &discussed, &stats, {}, ping};
    if (!ping) signals.chime_signals = classify_stuck_unsolved(short_window, client_, config_.bot_name, diag);
    const auto conditions = evaluate_conditions(signals, trigger_);
    rec.checks = conditions.checks;

    auto decision = arbitrate(conditions, config_.arbitration);
    decision.cycle = rec.cycle;
    if (decision.chosen != StrategyKind::KeepSilent) {
        const Utterance* last = nullptr;
        if (ping && !conversation.empty()) last = &conversation.back();
        ResponseContext ctx{&config_, &state_, &summary_, &discussed, &stats, short_window, last};
        decision.response = generate_response(decision, ctx, client_, diag);
        if (decision.response.empty()) {
            diag.warn(std::string(to_string(decision.chosen)) + " downgraded to KeepSilent");
            decision.chosen = StrategyKind::KeepSilent;
            decision.target.reset();
            decision.hint.reset();
            decision.focal_subtopic.reset();
        }
    }
    commit_decision(trigger_, decision, config_.arbitration);

    rec.decision = std::move(decision);
    rec.warnings = std::move(diag.warnings);
    if (log_ != nullptr) log_->append(rec);
    {
        std::lock_guard lock(mu_);
        decisions_.push_back(rec);
    }
    return rec;
}

std::vector<Utterance> SessionEngine::process(const std::string& sender, const std::string& text) {
    const auto in = ingest_human(sender, text);
    std::vector<Utterance> replies;
    if (in.ping || in.cycle_due) {
        const auto rec = run_cycle(in.utterance.id, in.ping);
        if (!rec.decision.response.empty()) {
            replies.push_back(append(config_.bot_name, UtteranceKind::Bot, rec.decision.response));
        }
    }
    return replies;
}

void SessionEngine::set_roster(std::vector<std::string> roster) {
    std::lock_guard lock(mu_);
    roster_ = std::move(roster);
}

std::vector<std::string> SessionEngine::roster() const {
    std::lock_guard lock(mu_);
    return roster_;
}

Transcript SessionEngine::transcript() const {
    std::lock_guard lock(mu_);
    return transcript_;
}

std::vector<DecisionRecord> SessionEngine::decisions() const {
    std::lock_guard lock(mu_);
    return decisions_;
}

int SessionEngine::pending() const {
    std::lock_guard lock(mu_);
    return pending_;
}

// +-----------------------------------+
// |              Replay               |
// +-----------------------------------+

ReplayOutcome replay_session(const LoadedSession& session, Provider& provider) {
    if (!session.config) throw Error("session log has no header record");
    ReplayOutcome out;
    out.recorded_cycles = static_cast<int>(session.decisions.size());

    LlmClient client(provider, RetryPolicy{1, std::chrono::milliseconds(0)});
    SessionEngine engine(*session.config, client);
    engine.start(session.subtopics);

    std::size_t next_decision = 0;
    std::deque<std::string> expected_replies;
    const auto differ = [&](std::string what) {
        if (out.differences.size() < 20) out.differences.push_back(std::move(what));
    };

    for (const auto& j : session.records) {
        if (j.at("record") == "decision") continue;
        const auto u = utterance_from_json(j);
        if (u.kind == UtteranceKind::Bot) {
            if (expected_replies.empty()) {
                differ("bot utterance " + std::to_string(u.id) + " has no matching decision");
            } else {
                if (expected_replies.front() != u.text) {
                    differ("bot utterance " + std::to_string(u.id) + " differs from the replayed response");
                }
                expected_replies.pop_front();
            }
            engine.append_recorded(u);
            continue;
        }
        engine.append_recorded(u);
        if (u.kind != UtteranceKind::Human) continue;

        const auto in = engine.observe_human(u);
        if (!in.ping && !in.cycle_due) continue;
        if (next_decision >= session.decisions.size()) {
            differ("replay runs a cycle after utterance " + std::to_string(u.id) + " that was never recorded");
            break;
        }
        const auto& recorded = session.decisions[next_decision++];
        if (auto it = recorded.find("roster"); it != recorded.end()) {
            engine.set_roster(it->get<std::vector<std::string>>());
        }
        DecisionRecord rec;
        try {
            rec = engine.run_cycle(u.id, in.ping);
        } catch (const std::exception& e) {
            differ("cycle " + std::to_string(next_decision) + " failed: " + e.what());
            break;
        }
        ++out.cycles;
        const auto replayed = to_json(rec);
        if (replayed != recorded) {
            std::string keys;
            for (const auto& [k, v] : recorded.items()) {
                if (!replayed.contains(k) || replayed.at(k) != v) keys += (keys.empty() ? "" : ", ") + k;
            }
            differ("cycle " + std::to_string(rec.cycle) + " differs in: " + keys);
        }
        if (!rec.decision.response.empty()) expected_replies.push_back(rec.decision.response);
    }
    return out;
}

}  // namespace muca
