#include "muca/config.hpp"
#include "muca/core.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace muca;

TEST(DeriveConfig, SmallFourParticipants) {
    const auto c = derive_config(4, Profile::Small, {"book exchange"});
    EXPECT_EQ(c.n_sw, 8);
    EXPECT_EQ(c.n_exe, 3);
    EXPECT_EQ(c.n_lw, 80);
    EXPECT_EQ(c.participants, 4);
}

TEST(DeriveConfig, MediumEightParticipants) {
    const auto c = derive_config(8, Profile::Medium, {"book exchange"});
    EXPECT_EQ(c.n_sw, 16);
    EXPECT_EQ(c.n_exe, 6);
    EXPECT_EQ(c.n_lw, 160);
}

TEST(DeriveConfig, MediumRoundsHalfUp) {
    // 0.75 * 2 = 1.5 -> 2, 0.75 * 6 = 4.5 -> 5, 0.75 * 5 = 3.75 -> 4
    EXPECT_EQ(derive_config(2, Profile::Medium, {"t"}).n_exe, 2);
    EXPECT_EQ(derive_config(6, Profile::Medium, {"t"}).n_exe, 5);
    EXPECT_EQ(derive_config(5, Profile::Medium, {"t"}).n_exe, 4);
}

TEST(DeriveConfig, RejectsTooFewParticipantsAndEmptyTopic) {
    EXPECT_THROW(derive_config(1, Profile::Small, {"t"}), ConfigError);
    EXPECT_THROW(derive_config(4, Profile::Small, {""}), ConfigError);
}

TEST(DeriveConfig, PureAndLongWindowLaw) {
    for (int p = 2; p <= 20; ++p) {
        for (auto prof : {Profile::Small, Profile::Medium}) {
            const auto a = derive_config(p, prof, {"t"});
            const auto b = derive_config(p, prof, {"t"});
            EXPECT_EQ(a.n_lw, 10 * a.n_sw);
            EXPECT_EQ(to_json(a), to_json(b));
        }
    }
}

TEST(DeriveConfig, ArbitrationScalesWithParticipants) {
    const auto a = derive_config(4, Profile::Small, {"t"}).arbitration;
    EXPECT_EQ(a.warmup_summarization, 44);
    EXPECT_EQ(a.cooldown_summarization, 48);
    EXPECT_EQ(a.warmup_encouragement, 12);
    EXPECT_EQ(a.warmup_transition, 20);
    EXPECT_EQ(a.cooldown_transition, 28);
    EXPECT_EQ(a.warmup_conflict, 36);
    EXPECT_EQ(a.conflict_stall_window, 36);
    EXPECT_EQ(a.n_active_required, 2);
    EXPECT_EQ(ArbitrationParams::for_participants(5).n_active_required, 3);
}

TEST(Window, ShortTranscript) {
    Transcript t;
    for (int i = 1; i <= 3; ++i) t.push_back(oracle::human(i, "A", "x"));
    const auto w = window(t, 8);
    ASSERT_EQ(w.size(), 3u);
    EXPECT_EQ(w.front().id, 1);
}

TEST(Window, SuffixOfLongTranscript) {
    Transcript t;
    for (int i = 1; i <= 100; ++i) t.push_back(oracle::human(i, "A", "x"));
    const auto w = window(t, 8);
    ASSERT_EQ(w.size(), 8u);
    EXPECT_EQ(w.front().id, 93);
    EXPECT_EQ(w.back().id, 100);
}

TEST(Window, Empty) {
    Transcript t;
    EXPECT_TRUE(window(t, 8).empty());
}

TEST(Window, AlwaysSuffixOfMinLength) {
    Transcript t;
    for (int n = 0; n < 30; ++n) {
        for (std::size_t k = 1; k < 40; ++k) {
            const auto w = window(t, k);
            ASSERT_EQ(w.size(), std::min(k, t.size()));
            if (!w.empty()) EXPECT_EQ(&w.back(), &t.back());
        }
        t.push_back(oracle::human(n + 1, "A", "x"));
    }
}

TEST(CountWords, Examples) {
    EXPECT_EQ(count_words(""), 0u);
    EXPECT_EQ(count_words("hello world"), 2u);
    EXPECT_EQ(count_words("  a  b\tc "), 3u);
    EXPECT_EQ(count_words("\n\n"), 0u);
}

TEST(Strategy, RanksAreTotalOrder) {
    std::set<int> ranks;
    for (auto k : kAllStrategies) {
        ranks.insert(default_rank(k));
        EXPECT_EQ(parse_strategy(to_string(k)), k);
    }
    EXPECT_EQ(ranks, (std::set<int>{1, 2, 3, 4, 5, 6, 7}));
}

TEST(Config, FileFormatRoundTrip) {
    const nlohmann::json j = {{"topic", "book exchange"},
                              {"agenda", {"venue", "sponsors", "rules"}},
                              {"profile", "medium"},
                              {"participants", 8},
                              {"arbitration", {{"chime_threshold", 0.5}}},
                              {"seed", 3}};
    const auto c = app_config_from_json(j);
    EXPECT_EQ(c.session.n_sw, 16);
    EXPECT_EQ(c.session.inputs.agenda.size(), 3u);
    EXPECT_DOUBLE_EQ(c.session.arbitration.chime_threshold, 0.5);
    const auto again = app_config_from_json(to_json(c));
    EXPECT_EQ(to_json(again), to_json(c));
}

TEST(Config, MalformedFileIsConfigError) {
    EXPECT_THROW(app_config_from_json(nlohmann::json{{"topic", 5}, {"participants", 4}}), ConfigError);
    EXPECT_THROW(app_config_from_json(nlohmann::json{{"topic", "x"}, {"participants", 4}, {"profile", "huge"}}),
                 Error);
}
