#include "muca/arbitrator.hpp"

#include "muca/prompts.hpp"
#include "muca/subtopics.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

namespace muca {

std::string_view to_string(TransitionHint h) {
    return h == TransitionHint::AskInterest ? "AskInterest" : "ProposeNext";
}

ConditionSet::ConditionSet() {
    for (auto k : kAllStrategies) checks[strategy_slot(k)].strategy = k;
}

// +-----------------------------------+
// |        Trigger conditions         |
// +-----------------------------------+

bool detect_direct_ping(std::string_view text, std::string_view bot_keyword) {
    return contains_icase(text, bot_keyword);
}

std::vector<std::string> detect_lurkers(const ParticipantStats& stats, const ArbitrationParams& params) {
    std::vector<std::string> out;
    if (stats.participants.size() < 2) return out;
    if (!(stats.var_freq_lt > 0.0) || !(stats.var_len_lt > 0.0)) return out;
    for (const auto& p : stats.participants) {
        const double df = p.freq_lt - stats.mean_freq_lt;
        const double dl = p.len_lt - stats.mean_len_lt;
        const bool long_term = df * df / stats.var_freq_lt > params.thre_freq_lt &&
                               dl * dl / stats.var_len_lt > params.thre_len_lt && df < 0.0 && dl < 0.0;
        const bool short_term = p.freq_st < params.thre_freq_st && p.len_st < params.thre_len_st;
        if (long_term && short_term) out.push_back(p.name);
    }
    return out;
}

double silence_probability(int n_silent, double alpha) {
    if (n_silent <= 0) return 0.0;
    return n_silent / (n_silent + alpha);
}

double semantic_probability(int b_stuck, int b_unsolve, double beta) {
    const double stuck = b_stuck != 0 ? 1.0 : 0.0;
    const double unsolve = b_unsolve != 0 ? 1.0 : 0.0;
    return stuck + beta * (1.0 - stuck) * unsolve;
}

ChimeInResult chime_in_decision(const ChimeInSignals& signals, const ArbitrationParams& params) {
    ChimeInResult r;
    r.p_silence = silence_probability(signals.n_silent, params.silence_alpha);
    r.p_semantic = semantic_probability(signals.b_stuck, signals.b_unsolve, params.semantic_beta);
    r.p_chime = (r.p_silence + r.p_semantic) / 2.0;
    r.fire = r.p_chime > params.chime_threshold;
    return r;
}

ChimeInSignals classify_stuck_unsolved(std::span<const Utterance> short_window, LlmClient& client,
                                       std::string_view bot_name, Diagnostics& diag) {
    if (short_window.empty()) return {};
    std::string answer;
    try {
        const auto resp = client.complete(prompts::stuck_unsolved(), {{"window", format_window(short_window)},
                                                                      {"bot_name", std::string(bot_name)}});
        answer = extract_answer(resp.text);
    } catch (const ProviderUnavailable& e) {
        diag.warn(std::string("stuck/unsolved classification unavailable: ") + e.what());
        return {};
    }
    static const std::regex stuck_re(R"(stuck\s*[=:]\s*([01])\b)", std::regex::icase);
    static const std::regex unsolve_re(R"(unsolve[a-z]*\s*[=:]\s*([01])\b)", std::regex::icase);
    std::smatch sm;
    std::smatch um;
    if (!std::regex_search(answer, sm, stuck_re) || !std::regex_search(answer, um, unsolve_re)) {
        diag.warn("unparseable stuck/unsolved labels: '" + answer + "'");
        return {};
    }
    return ChimeInSignals{sm[1] == "1" ? 1 : 0, um[1] == "1" ? 1 : 0, 0};
}

std::optional<TransitionHint> subtopic_transition_condition(int n_ed, int n_ing, int participants) {
    if (n_ing < 0 || n_ing > n_ed || n_ed > participants) {
        throw ParameterError("transition condition requires 0 <= N_ing <= N_ed <= P");
    }
    // Integer forms of N_ed < P/2 and N_ing < N_ed/2.
    if (2 * n_ed < participants) return TransitionHint::AskInterest;
    if (2 * n_ing < n_ed) return TransitionHint::ProposeNext;
    return std::nullopt;
}

bool conflict_resolution_condition(std::span<const std::pair<int, int>> n_well_history, int utterance_index,
                                   int stall_window) {
    if (n_well_history.empty() || utterance_index < stall_window) return false;
    const int current = n_well_history.back().second;
    std::size_t i = n_well_history.size() - 1;
    while (i > 0 && n_well_history[i - 1].second >= current) --i;
    const int since = n_well_history[i].first;
    return utterance_index - since >= stall_window;
}

bool initiative_summarization_condition(const std::set<std::string>& active_since_last_summary,
                                        const ArbitrationParams& params) {
    return static_cast<int>(active_since_last_summary.size()) >= params.n_active_required;
}

std::optional<int> focal_subtopic(const SubTopicState& state, const std::vector<int>& discussed,
                                  const ParticipantStats& stats) {
    std::vector<int> candidates;
    for (std::size_t i = 0; i < state.subtopics.size(); ++i) {
        if (state.entries[i].status == SubTopicStatus::BeingDiscussed) candidates.push_back(state.subtopics[i].index);
    }
    if (candidates.empty()) candidates = discussed;
    std::optional<int> best;
    int best_ed = -1;
    for (int idx : candidates) {
        const auto it = stats.n_ed.find(idx);
        const int ed = it == stats.n_ed.end() ? 0 : it->second;
        if (ed > best_ed || (ed == best_ed && best && idx < *best)) {
            best = idx;
            best_ed = ed;
        }
    }
    return best;
}

// +-----------------------------------+
// |        Gating and ranking         |
// +-----------------------------------+

int warmup(StrategyKind k, const ArbitrationParams& params) {
    switch (k) {
        case StrategyKind::InitiativeSummarization: return params.warmup_summarization;
        case StrategyKind::ParticipationEncouragement: return params.warmup_encouragement;
        case StrategyKind::SubTopicTransition: return params.warmup_transition;
        case StrategyKind::ConflictResolution: return params.warmup_conflict;
        default: return 0;
    }
}

int cooldown(StrategyKind k, const ArbitrationParams& params) {
    switch (k) {
        case StrategyKind::InitiativeSummarization: return params.cooldown_summarization;
        case StrategyKind::SubTopicTransition:
        case StrategyKind::ConflictResolution: return params.cooldown_transition;
        default: return 0;
    }
}

bool gate(StrategyKind k, const TriggerState& state, const ArbitrationParams& params,
          const std::optional<std::string>& target) {
    if (k == StrategyKind::DirectChatting || k == StrategyKind::KeepSilent) return true;
    const int idx = state.utterance_index;
    if (idx < warmup(k, params)) return false;
    if (auto it = state.last_fired.find(k); it != state.last_fired.end() && idx - it->second < cooldown(k, params)) {
        return false;
    }
    if (k == StrategyKind::ParticipationEncouragement && target) {
        if (auto it = state.encouragement.find(*target); it != state.encouragement.end()) {
            const auto& pc = it->second;
            if (pc.last_pinged && idx - *pc.last_pinged < pc.cooldown) return false;
        }
    }
    return true;
}

StrategyDecision arbitrate(const ConditionSet& conditions, const ArbitrationParams& params) {
    StrategyDecision d;
    d.chime_signals = conditions.chime_signals;
    d.chime = conditions.chime;
    for (const auto& c : conditions.checks) {
        if (c.eligible() && c.strategy != StrategyKind::KeepSilent) d.eligible_set.push_back(c);
    }
    if (conditions.at(StrategyKind::DirectChatting).triggered) {
        d.chosen = StrategyKind::DirectChatting;
    } else {
        int best = params.rank(StrategyKind::KeepSilent);
        for (const auto& c : d.eligible_set) {
            if (const int r = params.rank(c.strategy); r < best) {
                best = r;
                d.chosen = c.strategy;
            }
        }
    }
    if (d.chosen == StrategyKind::ParticipationEncouragement) d.target = conditions.encouragement_target;
    if (d.chosen == StrategyKind::SubTopicTransition) d.hint = conditions.transition_hint;
    if (d.chosen == StrategyKind::SubTopicTransition || d.chosen == StrategyKind::ConflictResolution) {
        d.focal_subtopic = conditions.focal_subtopic;
    }
    return d;
}

ConditionSet evaluate_conditions(const CycleSignals& signals, const TriggerState& state) {
    const auto& config = *signals.config;
    const auto& params = config.arbitration;
    const auto& stats = *signals.stats;
    ConditionSet cs;

    auto& dc = cs.at(StrategyKind::DirectChatting);
    dc.triggered = signals.pinged;
    dc.gated = true;

    auto& is = cs.at(StrategyKind::InitiativeSummarization);
    is.triggered = initiative_summarization_condition(state.active_since_last_summary, params);
    is.gated = gate(StrategyKind::InitiativeSummarization, state, params);
    is.detail = "active=" + std::to_string(state.active_since_last_summary.size()) +
                " required=" + std::to_string(params.n_active_required);

    auto& pe = cs.at(StrategyKind::ParticipationEncouragement);
    auto lurkers = detect_lurkers(stats, params);
    std::stable_sort(lurkers.begin(), lurkers.end(), [&](const std::string& a, const std::string& b) {
        return stats.find(a)->len_lt < stats.find(b)->len_lt;
    });
    pe.triggered = !lurkers.empty();
    for (const auto& l : lurkers) {
        if (gate(StrategyKind::ParticipationEncouragement, state, params, l)) {
            cs.encouragement_target = l;
            break;
        }
    }
    pe.gated = cs.encouragement_target.has_value() ||
               (lurkers.empty() && gate(StrategyKind::ParticipationEncouragement, state, params));
    pe.detail = "lurkers=";
    for (std::size_t i = 0; i < lurkers.size(); ++i) pe.detail += (i ? "," : "") + lurkers[i];

    auto& st = cs.at(StrategyKind::SubTopicTransition);
    cs.focal_subtopic = focal_subtopic(*signals.subtopics, *signals.discussed, stats);
    if (cs.focal_subtopic) {
        const int n_ed = stats.n_ed.at(*cs.focal_subtopic);
        const int n_ing = stats.n_ing.at(*cs.focal_subtopic);
        cs.transition_hint = subtopic_transition_condition(n_ed, std::min(n_ing, n_ed),
                                                           std::max(config.participants, n_ed));
        st.detail = "focal=" + std::to_string(*cs.focal_subtopic) + " n_ed=" + std::to_string(n_ed) +
                    " n_ing=" + std::to_string(n_ing);
        if (cs.transition_hint) st.detail += " hint=" + std::string(to_string(*cs.transition_hint));
    } else {
        st.detail = "no focal sub-topic";
    }
    st.triggered = cs.transition_hint.has_value();
    st.gated = gate(StrategyKind::SubTopicTransition, state, params);

    auto& cr = cs.at(StrategyKind::ConflictResolution);
    cr.triggered = conflict_resolution_condition(state.n_well_history, state.utterance_index,
                                                 params.conflict_stall_window);
    cr.gated = gate(StrategyKind::ConflictResolution, state, params);
    cr.detail = "n_well=" + std::to_string(state.n_well_history.empty() ? 0 : state.n_well_history.back().second);

    auto& ci = cs.at(StrategyKind::InContextChimeIn);
    cs.chime_signals = signals.chime_signals;
    cs.chime_signals.n_silent = state.n_silent;
    cs.chime = chime_in_decision(cs.chime_signals, params);
    ci.triggered = cs.chime.fire;
    ci.gated = true;
    std::ostringstream os;
    os << "p_chime=" << cs.chime.p_chime;
    ci.detail = os.str();

    auto& ks = cs.at(StrategyKind::KeepSilent);
    ks.gated = true;
    return cs;
}

void commit_decision(TriggerState& state, const StrategyDecision& decision, const ArbitrationParams& params) {
    if (decision.chosen == StrategyKind::KeepSilent) {
        ++state.n_silent;
        return;
    }
    state.n_silent = 0;
    state.last_fired[decision.chosen] = state.utterance_index;
    if (decision.chosen == StrategyKind::ParticipationEncouragement && decision.target) {
        auto& pc = state.encouragement[*decision.target];
        pc.cooldown += params.encouragement_cooldown_increment;
        pc.last_pinged = state.utterance_index;
    }
    if (decision.chosen == StrategyKind::InitiativeSummarization) state.active_since_last_summary.clear();
}

// +-----------------------------------+
// |        Response generation        |
// +-----------------------------------+

std::string format_topic_info(const TopicInputs& inputs) {
    std::ostringstream os;
    os << "Topic: " << inputs.topic << '\n';
    if (!inputs.agenda.empty()) {
        os << "Agenda:\n";
        for (std::size_t i = 0; i < inputs.agenda.size(); ++i) os << "  " << i + 1 << ". " << inputs.agenda[i] << '\n';
    }
    if (!trim(inputs.hints).empty()) os << "Hints: " << inputs.hints << '\n';
    if (!trim(inputs.attendee_roles).empty()) os << "Attendee roles: " << inputs.attendee_roles << '\n';
    return os.str();
}

std::string describe_inactive_participant(const ParticipantFeatures& f, const SessionConfig& config,
                                          const SubTopicState& state) {
    std::ostringstream os;
    os << f.name << " sent " << f.freq_st << " message(s) (" << f.len_st << " words) in the last " << config.n_sw
       << " utterances and " << f.freq_lt << " message(s) (" << f.len_lt << " words) in the last " << config.n_lw
       << ".";
    if (f.freq_lt == 0 && f.interest.empty()) {
        os << " They have not spoken yet.";
        return os.str();
    }
    std::vector<std::pair<int, int>> interests(f.interest.begin(), f.interest.end());
    std::stable_sort(interests.begin(), interests.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (!interests.empty()) {
        os << " Interest by sub-topic:";
        for (const auto& [idx, count] : interests) {
            os << ' ' << state.subtopic(idx).title << " (" << count << " message(s));";
        }
    }
    return os.str();
}

namespace {

std::string candidate_list(const SubTopicState& state, std::optional<int> focal) {
    std::ostringstream os;
    for (std::size_t i = 0; i < state.subtopics.size(); ++i) {
        const auto& s = state.subtopics[i];
        if (focal && s.index == *focal) continue;
        if (state.entries[i].status == SubTopicStatus::WellDiscussed) continue;
        os << s.index << ". " << s.title << " (" << to_string(state.entries[i].status) << ")\n";
    }
    const auto out = os.str();
    return out.empty() ? "none (all other sub-topics are well discussed)\n" : out;
}

std::string hint_text(std::optional<TransitionHint> hint) {
    if (hint == TransitionHint::AskInterest) {
        return "Fewer than half of the participants have discussed the current sub-topic. Ask the participants "
               "whether they are still interested in it. Do not propose the next sub-topic yourself.";
    }
    return "Most participants discussed the current sub-topic but few are still on it. Ask the participants "
           "whether they are willing to switch to the next sub-topic you suggest from the candidates.";
}

}  // namespace

std::string generate_response(const StrategyDecision& decision, const ResponseContext& ctx, LlmClient& client,
                              Diagnostics& diag) {
    const auto& config = *ctx.config;
    const auto& state = *ctx.subtopics;
    const auto window_text = format_window(ctx.short_window);
    const auto summary_text = format_summary(*ctx.summary, state.subtopics);
    const auto discussed_text = format_discussed(*ctx.discussed, state.subtopics);
    const auto focal_title = decision.focal_subtopic ? state.subtopic(*decision.focal_subtopic).title
                                                     : std::string("(none)");

    const PromptTemplate* tmpl = nullptr;
    Bindings b;
    switch (decision.chosen) {
        case StrategyKind::DirectChatting:
            tmpl = &prompts::direct_chatting();
            b = {{"bot_name", config.bot_name},
                 {"topic_info", format_topic_info(config.inputs)},
                 {"summary", summary_text},
                 {"statuses", format_statuses(state)},
                 {"discussed", discussed_text},
                 {"window", window_text},
                 {"last_utterance", ctx.last_utterance ? ctx.last_utterance->sender + ": " + ctx.last_utterance->text
                                                       : std::string("(none)")}};
            break;
        case StrategyKind::InitiativeSummarization:
            tmpl = &prompts::initiative_summarization();
            b = {{"topic_info", format_topic_info(config.inputs)},
                 {"discussed", discussed_text},
                 {"summary", summary_text},
                 {"window", window_text}};
            break;
        case StrategyKind::ParticipationEncouragement: {
            const ParticipantFeatures* f = decision.target ? ctx.stats->find(*decision.target) : nullptr;
            if (f == nullptr) {
                diag.warn("encouragement chosen without a known target");
                return {};
            }
            tmpl = &prompts::participation_encouragement();
            b = {{"participant", f->name},
                 {"inactive_status", describe_inactive_participant(*f, config, state)},
                 {"summary", summary_text},
                 {"window", window_text}};
            break;
        }
        case StrategyKind::SubTopicTransition:
            tmpl = &prompts::subtopic_transition();
            b = {{"current_subtopic", focal_title},
                 {"candidates", candidate_list(state, decision.focal_subtopic)},
                 {"hint", hint_text(decision.hint)},
                 {"summary", summary_text},
                 {"window", window_text}};
            break;
        case StrategyKind::ConflictResolution:
            tmpl = &prompts::conflict_resolution();
            b = {{"current_subtopic", focal_title},
                 {"candidates", candidate_list(state, decision.focal_subtopic)},
                 {"summary", summary_text},
                 {"window", window_text}};
            break;
        case StrategyKind::InContextChimeIn:
            tmpl = &prompts::in_context_chime_in();
            b = {{"bot_name", config.bot_name},
                 {"topic_info", format_topic_info(config.inputs)},
                 {"summary", summary_text},
                 {"statuses", format_statuses(state)},
                 {"discussed", discussed_text},
                 {"window", window_text}};
            break;
        case StrategyKind::KeepSilent: return {};
    }

    try {
        auto text = extract_answer(client.complete(*tmpl, b).text);
        if (text.empty()) diag.warn(std::string(to_string(decision.chosen)) + " produced an empty response");
        return text;
    } catch (const ProviderUnavailable& e) {
        diag.warn(std::string(to_string(decision.chosen)) + " response failed: " + e.what());
        return {};
    }
}

}  // namespace muca
