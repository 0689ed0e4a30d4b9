#include "muca/arbitrator.hpp"
#include "muca/prompts.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace muca;
using oracle::human;

namespace {

ParticipantStats table(const std::vector<oracle::LurkerRow>& rows) {
    ParticipantStats s;
    std::vector<double> f;
    std::vector<double> l;
    for (const auto& r : rows) {
        ParticipantFeatures p;
        p.name = r.name;
        p.freq_lt = static_cast<int>(r.freq_lt);
        p.len_lt = static_cast<int>(r.len_lt);
        p.freq_st = static_cast<int>(r.freq_st);
        p.len_st = static_cast<int>(r.len_st);
        s.participants.push_back(p);
        f.push_back(static_cast<double>(r.freq_lt));
        l.push_back(static_cast<double>(r.len_lt));
    }
    std::tie(s.mean_freq_lt, s.var_freq_lt) = mean_and_sample_variance(f);
    std::tie(s.mean_len_lt, s.var_len_lt) = mean_and_sample_variance(l);
    return s;
}

std::vector<oracle::LurkerRow> example_rows(long long d_len_st = 0) {
    return {{"A", 10, 200, 3, 60}, {"B", 9, 180, 3, 50}, {"C", 8, 160, 2, 40}, {"D", 1, 4, 0, d_len_st}};
}

}  // namespace

TEST(Ping, Keyword) {
    EXPECT_TRUE(detect_direct_ping("@mubot what's the budget?", "@mubot"));
    EXPECT_TRUE(detect_direct_ping("@MUBOT hi", "@mubot"));
    EXPECT_FALSE(detect_direct_ping("the robot was great", "@mubot"));
}

TEST(Lurkers, WorkedExample) {
    const auto rows = example_rows();
    const auto s = table(rows);
    // Ratios by hand: D 36/16.667 = 2.16 and 17424/8010.667 = 2.1751; A 9/16.667 = 0.54.
    EXPECT_NEAR((1 - s.mean_freq_lt) * (1 - s.mean_freq_lt) / s.var_freq_lt, 2.16, 0.005);
    EXPECT_NEAR((4 - s.mean_len_lt) * (4 - s.mean_len_lt) / s.var_len_lt, 2.1751, 1e-4);
    EXPECT_NEAR((10 - s.mean_freq_lt) * (10 - s.mean_freq_lt) / s.var_freq_lt, 0.54, 0.005);
    EXPECT_EQ(detect_lurkers(s, {}), std::vector<std::string>{"D"});
    EXPECT_EQ(oracle::lurkers(rows), std::vector<std::string>{"D"});
}

TEST(Lurkers, ZeroVarianceFlagsNobody) {
    const auto s = table({{"A", 5, 50, 0, 0}, {"B", 5, 50, 0, 0}, {"C", 5, 50, 0, 0}});
    EXPECT_TRUE(detect_lurkers(s, {}).empty());
}

TEST(Lurkers, ShortWindowWordsBlock) {
    EXPECT_TRUE(detect_lurkers(table(example_rows(6)), {}).empty());
    EXPECT_EQ(detect_lurkers(table(example_rows(4)), {}), std::vector<std::string>{"D"});
}

TEST(Lurkers, ScaleInvariantLongTermPart) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<oracle::LurkerRow> rows;
        const int n = 2 + static_cast<int>(rng() % 8);
        for (int i = 0; i < n; ++i) {
            rows.push_back({"P" + std::to_string(i), static_cast<long long>(rng() % 15),
                            static_cast<long long>(rng() % 200), static_cast<long long>(rng() % 2),
                            static_cast<long long>(rng() % 8)});
        }
        const auto base = detect_lurkers(table(rows), {});
        for (int k : {2, 3, 7}) {
            auto scaled = rows;
            for (auto& r : scaled) {
                r.freq_lt *= k;
                r.len_lt *= k;
                r.freq_st *= k;
                r.len_st *= k;
            }
            ArbitrationParams p;
            p.thre_freq_st *= k;
            p.thre_len_st *= k;
            ASSERT_EQ(detect_lurkers(table(scaled), p), base);
        }
    }
}

TEST(Chime, SilenceExamples) {
    EXPECT_EQ(silence_probability(0, 0.2), 0.0);
    EXPECT_NEAR(silence_probability(1, 0.2), 1.0 / 1.2, 1e-12);
    EXPECT_NEAR(silence_probability(2, 0.2), 2.0 / 2.2, 1e-12);
}

TEST(Chime, SemanticExamples) {
    EXPECT_EQ(semantic_probability(0, 0, 0.4), 0.0);
    EXPECT_NEAR(semantic_probability(0, 1, 0.4), 0.4, 1e-12);
    EXPECT_EQ(semantic_probability(1, 1, 0.4), 1.0);
}

TEST(Chime, DecisionExamples) {
    const ArbitrationParams p;
    auto r = chime_in_decision({0, 0, 0}, p);
    EXPECT_EQ(r.p_chime, 0.0);
    EXPECT_FALSE(r.fire);
    r = chime_in_decision({0, 0, 1}, p);
    EXPECT_NEAR(r.p_chime, 0.4167, 1e-4);
    EXPECT_FALSE(r.fire);
    r = chime_in_decision({0, 1, 1}, p);
    EXPECT_NEAR(r.p_chime, 0.6167, 1e-4);
    EXPECT_TRUE(r.fire);
}

TEST(Chime, StrictThreshold) {
    ArbitrationParams p;
    p.chime_threshold = 0.5;  // p_semantic alone with stuck=1 gives exactly 0.5
    EXPECT_FALSE(chime_in_decision({1, 0, 0}, p).fire);
}

TEST(Chime, MonotoneAndBounded) {
    const ArbitrationParams p;
    for (int n = 0; n < 50; ++n) {
        for (int s = 0; s <= 1; ++s) {
            for (int u = 0; u <= 1; ++u) {
                const auto r = chime_in_decision({s, u, n}, p);
                ASSERT_GE(r.p_silence, 0.0);
                ASSERT_LT(r.p_silence, 1.0);
                ASSERT_LE(r.p_chime, 1.0);
                if (r.fire) {
                    ASSERT_TRUE(chime_in_decision({s, u, n + 1}, p).fire);
                    ASSERT_TRUE(chime_in_decision({1, u, n}, p).fire);
                    ASSERT_TRUE(chime_in_decision({s, 1, n}, p).fire);
                }
            }
        }
    }
}

TEST(Classify, ParsesAndFallsBack) {
    const std::string name(prompts::names::kStuckUnsolved);
    ScriptedProvider p;
    p.push_for(name, "ANSWER: stuck=1 unsolve=0").push_for(name, "no idea").push_for(name, "ANSWER: stuck=1 unsolve=1");
    LlmClient c(p);
    Diagnostics d;
    muca::Transcript t = {human(1, "A", "how much is the bus?"), human(2, "B", "how much is the bus?"),
                            human(3, "C", "how much is the bus?")};
    auto s = classify_stuck_unsolved(t, c, "MUCA", d);
    EXPECT_EQ(std::make_pair(s.b_stuck, s.b_unsolve), std::make_pair(1, 0));
    s = classify_stuck_unsolved(t, c, "MUCA", d);
    EXPECT_EQ(std::make_pair(s.b_stuck, s.b_unsolve), std::make_pair(0, 0));
    EXPECT_EQ(d.warnings.size(), 1u);
    s = classify_stuck_unsolved(t, c, "MUCA", d);
    EXPECT_EQ(std::make_pair(s.b_stuck, s.b_unsolve), std::make_pair(1, 1));
}

TEST(Transition, Examples) {
    EXPECT_EQ(subtopic_transition_condition(1, 1, 4), TransitionHint::AskInterest);
    EXPECT_EQ(subtopic_transition_condition(3, 1, 4), TransitionHint::ProposeNext);
    EXPECT_EQ(subtopic_transition_condition(4, 3, 4), std::nullopt);
    EXPECT_THROW(subtopic_transition_condition(2, 3, 4), ParameterError);
}

TEST(Conflict, Examples) {
    const std::vector<std::pair<int, int>> flat = {{0, 0}};
    EXPECT_TRUE(conflict_resolution_condition(flat, 36, 36));
    EXPECT_FALSE(conflict_resolution_condition(flat, 35, 36));
    const std::vector<std::pair<int, int>> rose = {{0, 0}, {20, 0}, {30, 1}, {35, 1}};
    EXPECT_FALSE(conflict_resolution_condition(rose, 40, 36));
    EXPECT_TRUE(conflict_resolution_condition(rose, 66, 36));
}

TEST(Summarization, ActiveSpeakers) {
    const auto p4 = ArbitrationParams::for_participants(4);
    const auto p8 = ArbitrationParams::for_participants(8);
    EXPECT_TRUE(initiative_summarization_condition({"A", "B"}, p4));
    EXPECT_FALSE(initiative_summarization_condition({"A"}, p4));
    EXPECT_FALSE(initiative_summarization_condition({"A", "B", "C"}, p8));
}

TEST(Gate, Examples) {
    const auto p = ArbitrationParams::for_participants(4);
    TriggerState s;
    s.utterance_index = 40;
    EXPECT_FALSE(gate(StrategyKind::InitiativeSummarization, s, p));
    s.utterance_index = 44;
    EXPECT_TRUE(gate(StrategyKind::InitiativeSummarization, s, p));

    s.utterance_index = 80;
    s.last_fired[StrategyKind::SubTopicTransition] = 60;
    EXPECT_FALSE(gate(StrategyKind::SubTopicTransition, s, p));
    s.utterance_index = 88;
    EXPECT_TRUE(gate(StrategyKind::SubTopicTransition, s, p));
    EXPECT_TRUE(gate(StrategyKind::DirectChatting, TriggerState{}, p));
}

TEST(Gate, EncouragementCooldownGrows) {
    const auto p = ArbitrationParams::for_participants(4);
    TriggerState s;
    std::vector<int> pings;
    for (int i = 0; i <= 40 && pings.size() < 4; ++i) {
        s.utterance_index = i;
        if (gate(StrategyKind::ParticipationEncouragement, s, p, std::string("D"))) {
            StrategyDecision d;
            d.chosen = StrategyKind::ParticipationEncouragement;
            d.target = "D";
            commit_decision(s, d, p);
            pings.push_back(i);
        }
    }
    EXPECT_EQ(pings, (std::vector<int>{12, 14, 18, 24}));
    EXPECT_EQ(s.encouragement.at("D").cooldown, 8);
}

TEST(Arbitrate, PicksMinimumRank) {
    const ArbitrationParams p;
    ConditionSet cs;
    for (auto k : {StrategyKind::ParticipationEncouragement, StrategyKind::SubTopicTransition}) {
        cs.at(k).triggered = cs.at(k).gated = true;
    }
    EXPECT_EQ(arbitrate(cs, p).chosen, StrategyKind::ParticipationEncouragement);
    EXPECT_EQ(arbitrate(ConditionSet{}, p).chosen, StrategyKind::KeepSilent);
    cs.at(StrategyKind::DirectChatting).triggered = true;
    EXPECT_EQ(arbitrate(cs, p).chosen, StrategyKind::DirectChatting);
}

TEST(Arbitrate, RandomMasksMatchBruteForce) {
    const ArbitrationParams p;
    std::mt19937 rng(3);
    for (int i = 0; i < 10000; ++i) {
        const unsigned mask = rng() & 0x7fu;
        ConditionSet cs;
        for (std::size_t slot = 0; slot < kStrategyCount; ++slot) {
            if ((mask >> slot) & 1u) cs.checks[slot].triggered = cs.checks[slot].gated = true;
        }
        ASSERT_EQ(strategy_slot(arbitrate(cs, p).chosen), static_cast<std::size_t>(oracle::choose(mask)));
    }
}

TEST(Arbitrate, CustomRanksRespected) {
    ArbitrationParams p;
    p.ranks = {1, 6, 2, 3, 4, 5, 7};
    ConditionSet cs;
    for (auto k : {StrategyKind::InitiativeSummarization, StrategyKind::ConflictResolution}) {
        cs.at(k).triggered = cs.at(k).gated = true;
    }
    EXPECT_EQ(arbitrate(cs, p).chosen, StrategyKind::ConflictResolution);
}

TEST(Commit, SilenceAndSummaryBookkeeping) {
    const auto p = ArbitrationParams::for_participants(4);
    TriggerState s;
    s.active_since_last_summary = {"A", "B"};
    StrategyDecision silent;
    commit_decision(s, silent, p);
    commit_decision(s, silent, p);
    EXPECT_EQ(s.n_silent, 2);
    StrategyDecision sum;
    sum.chosen = StrategyKind::InitiativeSummarization;
    s.utterance_index = 50;
    commit_decision(s, sum, p);
    EXPECT_EQ(s.n_silent, 0);
    EXPECT_TRUE(s.active_since_last_summary.empty());
    EXPECT_EQ(s.last_fired.at(StrategyKind::InitiativeSummarization), 50);
}

namespace {

struct Fixture {
    SessionConfig config = derive_config(4, Profile::Small, {"book exchange", {"venue", "donations", "rules"}});
    SubTopicState state = SubTopicState::initial({{1, "venue"}, {2, "donations"}, {3, "rules"}});
    AccumulativeSummary summary;
    std::vector<int> discussed = {1};
    ParticipantStats stats;
    muca::Transcript window = {human(1, "A", "@mubot what's our budget?")};

    ResponseContext ctx() {
        return {&config, &state, &summary, &discussed, &stats, window, &window.back()};
    }
};

}  // namespace

TEST(Response, DirectChatForbidsInventedFacts) {
    Fixture f;
    ScriptedProvider p;
    p.push_for(std::string(prompts::names::kDirectChatting),
               "ANSWER: The budget was not part of the event information, so it is out of scope for me.");
    LlmClient c(p);
    Diagnostics d;
    StrategyDecision dec;
    dec.chosen = StrategyKind::DirectChatting;
    const auto r = generate_response(dec, f.ctx(), c, d);
    EXPECT_NE(r.find("out of scope"), std::string::npos);
    const auto& prompt = p.requests()[0].prompt;
    EXPECT_NE(prompt.find("Do not make assumptions beyond the user-input"), std::string::npos);
    EXPECT_NE(prompt.find("what's our budget?"), std::string::npos);
}

TEST(Response, EncouragementPersonalised) {
    Fixture f;
    ParticipantFeatures dfeat;
    dfeat.name = "D";
    dfeat.freq_lt = 1;
    dfeat.len_lt = 4;
    dfeat.interest = {{2, 1}};
    f.stats.participants.push_back(dfeat);
    ScriptedProvider p;
    p.push_for(std::string(prompts::names::kParticipationEncouragement), "D, any thoughts on donations?");
    LlmClient c(p);
    Diagnostics d;
    StrategyDecision dec;
    dec.chosen = StrategyKind::ParticipationEncouragement;
    dec.target = "D";
    EXPECT_EQ(generate_response(dec, f.ctx(), c, d), "D, any thoughts on donations?");
    const auto& prompt = p.requests()[0].prompt;
    EXPECT_NE(prompt.find("donations (1 message(s))"), std::string::npos);
}

TEST(Response, EmptyCompletionIsEmpty) {
    Fixture f;
    ScriptedProvider p;
    p.push_for(std::string(prompts::names::kInContextChimeIn), "ANSWER:   ");
    LlmClient c(p);
    Diagnostics d;
    StrategyDecision dec;
    dec.chosen = StrategyKind::InContextChimeIn;
    EXPECT_TRUE(generate_response(dec, f.ctx(), c, d).empty());
    EXPECT_EQ(d.warnings.size(), 1u);
}

TEST(Response, TransitionCarriesHint) {
    Fixture f;
    ScriptedProvider p;
    p.push_for(std::string(prompts::names::kSubtopicTransition), "Still keen on the venue?");
    LlmClient c(p);
    Diagnostics d;
    StrategyDecision dec;
    dec.chosen = StrategyKind::SubTopicTransition;
    dec.hint = TransitionHint::AskInterest;
    dec.focal_subtopic = 1;
    generate_response(dec, f.ctx(), c, d);
    EXPECT_NE(p.requests()[0].prompt.find("still interested"), std::string::npos);
}
