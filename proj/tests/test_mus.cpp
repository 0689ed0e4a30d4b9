#include "muca/mus.hpp"
#include "muca/prompts.hpp"
#include "muca/synthetic.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace muca;
using namespace muca::mus;

namespace {

const std::string kModel(prompts::names::kUserModeling);
const std::string kNext(prompts::names::kNextSpeaker);
const std::string kRole(prompts::names::kSpeakingRole);
const std::string kTrait(prompts::names::kUtteranceTrait);
const std::string kUtt(prompts::names::kUtterance);

const std::string kSixRoles = "roles: questioner, proposer, supporter, skeptic, summarizer, direct-chatter";
const std::string kSixTraits = "traits: laconic, verbose, formal, casual, polite, blunt";

VirtualUserProfile user(const std::string& name) {
    return {name,
            {"questioner", "proposer", "supporter", "skeptic", "summarizer", "direct-chatter"},
            {"laconic", "verbose", "formal", "casual", "polite", "blunt"},
            length_params(3, 8, 20)};
}

SessionConfig config4() { return derive_config(4, Profile::Small, {"book exchange", {"venue", "donations", "rules"}}); }

}  // namespace

TEST(Lengths, ParamsForThreeEightTwenty) {
    const auto p = length_params(3, 8, 20);
    EXPECT_NEAR(p.mu, std::log(6.5), 1e-12);
    EXPECT_NEAR(p.mu, 1.8718, 1e-4);
    EXPECT_NEAR(p.sigma, 0.67 * (std::log(20.0) - std::log(6.5)), 1e-12);
    EXPECT_NEAR(p.sigma, 0.7530, 1e-4);
}

TEST(Lengths, DegenerateAlwaysReturnsC) {
    for (int c : {1, 4, 17}) {
        const auto p = length_params(c, c, c);
        EXPECT_NEAR(p.mu, std::log(c), 1e-12);
        EXPECT_EQ(p.sigma, 0.0);
        Rng rng(c);
        for (int i = 0; i < 1000; ++i) ASSERT_EQ(sample_length(p, rng), c);
    }
}

TEST(Lengths, OrderingViolationRejected) {
    EXPECT_THROW(length_params(5, 4, 10), ParameterError);
    EXPECT_THROW(length_params(0, 4, 10), ParameterError);
    EXPECT_THROW(length_params(3, 11, 10), ParameterError);
}

TEST(Lengths, BoundsMeanAndDeterminism) {
    const auto p = length_params(3, 8, 20);
    Rng rng(123);
    double sum = 0;
    std::vector<int> first;
    for (int i = 0; i < 100000; ++i) {
        const int v = sample_length(p, rng);
        ASSERT_GE(v, 3);
        ASSERT_LE(v, 20);
        sum += v;
        if (i < 50) first.push_back(v);
    }
    const auto pmf = oracle::truncated_pmf(p.mu, p.sigma, 3, 20);
    const double want = oracle::pmf_mean(pmf, 3);
    EXPECT_NEAR(sum / 100000.0, want, 0.02 * want);

    Rng again(123);
    for (int v : first) ASSERT_EQ(sample_length(p, again), v);
}

TEST(Lengths, ClipModeStaysInBounds) {
    const auto p = length_params(3, 8, 20);
    Rng rng(5);
    int at_bounds = 0;
    for (int i = 0; i < 20000; ++i) {
        const int v = sample_length(p, rng, Truncation::Clip);
        ASSERT_GE(v, 3);
        ASSERT_LE(v, 20);
        at_bounds += (v == 3 || v == 20);
    }
    EXPECT_GT(at_bounds, 0);
}

TEST(Lengths, SnippetStatsBoosted) {
    ChatSnippet s;
    for (int i = 0; i < 10; ++i) s.turns.push_back({"Ann", oracle::words(i == 0 ? 1 : (i == 9 ? 10 : 5))});
    const std::vector<ChatSnippet> snippets = {s};
    const auto st = snippet_length_stats(snippets);
    EXPECT_EQ(st.l_min, 1);
    EXPECT_EQ(st.l_max, 10);
    EXPECT_NEAR(st.l_avg, 5.1, 1e-12);
    const auto plain = boosted_params(st, {});
    EXPECT_EQ(plain.l_min, 1);
    EXPECT_EQ(plain.l_max, 10);
    const auto b = boosted_params(st, {3.0, 2.0, 2.0});
    EXPECT_EQ(b.l_min, 3);
    EXPECT_EQ(b.l_avg, 10);
    EXPECT_EQ(b.l_max, 20);
}

TEST(Snippets, Validation) {
    EXPECT_NO_THROW(validate_snippets(default_snippets()));
    std::vector<ChatSnippet> none;
    EXPECT_THROW(validate_snippets(none), ParameterError);
    std::vector<ChatSnippet> short_one = {ChatSnippet{{{"A", "hi"}}}};
    EXPECT_THROW(validate_snippets(short_one), ParameterError);
    const auto j = nlohmann::json::parse(R"([{"turns":[{"speaker":"A","text":"x"}]}, [{"speaker":"B","text":"y z"}]])");
    const auto parsed = snippets_from_json(j);
    ASSERT_EQ(parsed.size(), 2u);
    EXPECT_EQ(parsed[1].turns[0].speaker, "B");
}

TEST(Modeling, ValidAnswerVerbatim) {
    ScriptedProvider p;
    p.push_for(kModel, "ANSWER:\n" + kSixRoles + "\n" + kSixTraits);
    p.push_for(kModel, "ANSWER:\n" + kSixRoles + "\n" + kSixTraits);
    LlmClient c(p);
    Rng rng(1);
    Diagnostics d;
    const auto profiles = model_user_behavior(default_snippets(), {"Ann", "Bo"}, {}, c, rng, d);
    ASSERT_EQ(profiles.size(), 2u);
    EXPECT_EQ(profiles[0].roles, user("x").roles);
    EXPECT_EQ(profiles[0].traits, user("x").traits);
    EXPECT_TRUE(d.warnings.empty());
    const auto ann = snippet_length_stats(default_snippets(), std::string("Ann"));
    EXPECT_EQ(profiles[0].length.l_min, ann.l_min);
    EXPECT_EQ(profiles[0].length.l_max, ann.l_max);
}

TEST(Modeling, SevenNamesRepromptOnce) {
    ScriptedProvider p;
    p.push_for(kModel, "roles: questioner, proposer, supporter, skeptic, summarizer, direct-chatter, agree-er\n" + kSixTraits);
    p.set_rule([](const ProviderRequest&) { return std::optional<std::string>(kSixRoles + "\n" + kSixTraits); });
    LlmClient c(p);
    Rng rng(1);
    Diagnostics d;
    const auto profiles = model_user_behavior(default_snippets(), {"Ann", "Zed"}, {}, c, rng, d);
    EXPECT_EQ(p.calls_for(kModel), 3u);
    EXPECT_EQ(d.warnings.size(), 1u);
    EXPECT_EQ(profiles[0].roles, user("x").roles);
}

TEST(Modeling, InvalidTwiceFillsFromCatalogue) {
    ScriptedProvider p;
    p.set_rule([](const ProviderRequest&) { return std::optional<std::string>("roles: wizard\ntraits: sleepy"); });
    LlmClient c(p);
    Rng rng(2);
    Diagnostics d;
    const auto profiles = model_user_behavior(default_snippets(), {"Ann", "Bo"}, {}, c, rng, d);
    for (const auto& prof : profiles) {
        ASSERT_EQ(prof.roles.size(), 6u);
        ASSERT_EQ(prof.traits.size(), 6u);
        std::set<std::string> r(prof.roles.begin(), prof.roles.end());
        EXPECT_EQ(r.size(), 6u);
        for (const auto& x : prof.roles) {
            EXPECT_NE(std::find(default_roles().begin(), default_roles().end(), x), default_roles().end());
        }
        for (const auto& x : prof.traits) {
            EXPECT_NE(std::find(default_traits().begin(), default_traits().end(), x), default_traits().end());
        }
    }
    EXPECT_EQ(p.calls_for(kModel), 4u);
}

TEST(Catalogues, Sizes) {
    EXPECT_EQ(default_roles().size(), 11u);
    EXPECT_EQ(default_traits().size(), 10u);
}

namespace {

struct Turn {
    SessionConfig config = config4();
    std::vector<VirtualUserProfile> profiles = {user("A"), user("B"), user("C")};
    Transcript window = {oracle::human(1, "A", "hello all")};
    TurnContext ctx(std::optional<std::string> last = "A") { return {&config, window, "", last}; }
};

}  // namespace

TEST(NextSpeaker, LastSpeakerFallsBack) {
    Turn t;
    for (int seed = 0; seed < 30; ++seed) {
        ScriptedProvider p;
        p.push_for(kNext, "ANSWER: A");
        LlmClient c(p);
        Rng rng(seed);
        Diagnostics d;
        const auto ch = select_next_speaker(t.ctx(), t.profiles, RoleCooldowns{}, c, rng, d);
        ASSERT_TRUE(ch.fallback);
        ASSERT_NE(ch.user, "A");
        ASSERT_FALSE(ch.role.empty());
        ASSERT_EQ(p.calls_for(kRole), 0u);
    }
}

TEST(NextSpeaker, BotFallsBack) {
    Turn t;
    ScriptedProvider p;
    p.push_for(kNext, "ANSWER: MUCA");
    LlmClient c(p);
    Rng rng(4);
    Diagnostics d;
    const auto ch = select_next_speaker(t.ctx(), t.profiles, RoleCooldowns{}, c, rng, d);
    EXPECT_TRUE(ch.fallback);
    EXPECT_NE(ch.user, "MUCA");
    EXPECT_NE(ch.user, "A");
}

TEST(NextSpeaker, ValidProposalKept) {
    Turn t;
    ScriptedProvider p;
    p.push_for(kNext, "ANSWER: C").push_for(kRole, "ANSWER: questioner");
    LlmClient c(p);
    Rng rng(4);
    Diagnostics d;
    const auto ch = select_next_speaker(t.ctx(), t.profiles, RoleCooldowns{}, c, rng, d);
    EXPECT_EQ(ch.user, "C");
    EXPECT_EQ(ch.role, "questioner");
    EXPECT_FALSE(ch.fallback);
}

TEST(NextSpeaker, CoolingRoleRerolled) {
    Turn t;
    RoleCooldowns cd(3);
    cd.advance("C", "questioner");
    for (int seed = 0; seed < 30; ++seed) {
        ScriptedProvider p;
        p.push_for(kNext, "C").push_for(kRole, "questioner");
        LlmClient c(p);
        Rng rng(seed);
        Diagnostics d;
        const auto ch = select_next_speaker(t.ctx(), t.profiles, cd, c, rng, d);
        ASSERT_EQ(ch.user, "C");
        ASSERT_NE(ch.role, "questioner");
    }
}

TEST(Cooldowns, CountDownPerTurn) {
    RoleCooldowns cd(3);
    cd.advance("A", "questioner");
    EXPECT_EQ(cd.remaining("A", Behavior::AskingQuestions), 3);
    EXPECT_TRUE(cd.blocked("A", "detail-asker"));
    EXPECT_FALSE(cd.blocked("B", "questioner"));
    EXPECT_FALSE(cd.blocked("A", "proposer"));
    cd.advance("B", "proposer");
    cd.advance("C", "proposer");
    EXPECT_EQ(cd.remaining("A", Behavior::AskingQuestions), 1);
    cd.advance("B", "proposer");
    EXPECT_FALSE(cd.blocked("A", "questioner"));
    EXPECT_EQ(cd.remaining("A", Behavior::AskingQuestions), 0);
}

TEST(Utterance, LaconicBudgetInPrompt) {
    Turn t;
    ScriptedProvider p;
    p.push_for(kTrait, "ANSWER: laconic").push_for(kUtt, "ANSWER: B: park works for me");
    LlmClient c(p);
    Rng rng(1);
    Diagnostics d;
    const auto text = generate_utterance(t.ctx(), t.profiles[1], "supporter", 4, c, rng, d);
    EXPECT_EQ(text, "park works for me");
    const auto reqs = p.requests();
    ASSERT_EQ(reqs.size(), 2u);
    EXPECT_NE(reqs[0].prompt.find("4 words"), std::string::npos);
    EXPECT_NE(reqs[1].prompt.find("4 words"), std::string::npos);
    EXPECT_NE(reqs[1].prompt.find("laconic"), std::string::npos);
}

TEST(Utterance, EmptyTwiceSkips) {
    Turn t;
    ScriptedProvider p;
    p.push_for(kTrait, "laconic").push_for(kUtt, "").push_for(kUtt, "ANSWER:  ");
    LlmClient c(p);
    Rng rng(1);
    Diagnostics d;
    EXPECT_FALSE(generate_utterance(t.ctx(), t.profiles[1], "supporter", 4, c, rng, d).has_value());
    EXPECT_EQ(p.calls_for(kUtt), 2u);
}

TEST(Utterance, QuestionerBudget) {
    const MusSettings s;
    EXPECT_EQ(word_budget("questioner", 3, s), 6);
    EXPECT_EQ(word_budget("questioner", 9, s), 9);
    EXPECT_EQ(word_budget("proposer", 3, s), 3);
}

TEST(Simulation, InvariantsOverSyntheticRun) {
    auto provider = make_synthetic_provider();
    LlmClient client(*provider);
    const auto cfg = config4();
    SessionEngine engine(cfg, client);
    Rng rng(7);
    Diagnostics d;
    const auto profiles = model_user_behavior(default_snippets(), {"A", "B", "C", "D"}, {}, client, rng, d);
    engine.start();
    const auto r = run_simulation(engine, profiles, {}, 150, rng, client);
    EXPECT_EQ(r.human_turns + r.skipped_turns, 150);

    std::string last;
    int plain = 0;
    int pings = 0;
    for (const auto& u : engine.transcript()) {
        if (u.kind != UtteranceKind::Human) continue;
        ASSERT_NE(u.sender, last);
        ASSERT_NE(u.sender, cfg.bot_name);
        last = u.sender;
        detect_direct_ping(u.text, cfg.bot_keyword) ? ++pings : ++plain;
    }
    EXPECT_GT(pings, 0);
    EXPECT_EQ(engine.cycles(), plain / cfg.n_exe + pings);
}

TEST(Simulation, SkippedTurnsDoNotStall) {
    ScriptedProvider p(false);
    p.set_rule([](const ProviderRequest& r) -> std::optional<std::string> {
        if (r.template_name == kUtt) return std::string("");
        if (r.template_name == kModel) return kSixRoles + "\n" + kSixTraits;
        return std::nullopt;
    });
    p.set_fallback("ANSWER: none");
    LlmClient client(p);
    SessionEngine engine(config4(), client);
    engine.start();
    Rng rng(3);
    const std::vector<VirtualUserProfile> profiles = {user("A"), user("B")};
    const auto r = run_simulation(engine, profiles, {}, 5, rng, client);
    EXPECT_EQ(r.skipped_turns, 5);
    EXPECT_EQ(r.human_turns, 0);
}
