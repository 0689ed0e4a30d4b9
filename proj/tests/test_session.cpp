#include "muca/cli.hpp"
#include "muca/metrics.hpp"
#include "muca/session.hpp"
#include "muca/synthetic.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace muca;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / ("muca_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

SessionConfig config4() {
    return derive_config(4, Profile::Small, {"book exchange", {"venue", "donations", "rules"}});
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST(Persist, TenMessageSessionCounts) {
    const auto dir = temp_dir("persist");
    auto provider = make_synthetic_provider();
    LlmClient client(*provider);
    SessionLog log(dir / "s.jsonl");
    SessionEngine engine(config4(), client, &log);
    engine.start();
    const char* who[] = {"A", "B", "C", "D"};
    int bot = 0;
    for (int i = 0; i < 10; ++i) bot += static_cast<int>(engine.process(who[i % 4], "message number " + std::to_string(i)).size());
    EXPECT_EQ(engine.cycles(), 3);

    const auto lines = read_lines(dir / "s.jsonl");
    ASSERT_EQ(lines, log.lines());
    for (const auto& l : lines) EXPECT_NO_THROW((void)nlohmann::json::parse(l));
    const auto loaded = load_session(dir / "s.jsonl");
    ASSERT_TRUE(loaded.config.has_value());
    EXPECT_EQ(loaded.subtopics.size(), 3u);
    EXPECT_EQ(loaded.decisions.size(), 3u);
    int humans = 0;
    for (const auto& u : loaded.transcript) humans += u.kind == UtteranceKind::Human;
    EXPECT_EQ(humans, 10);
    EXPECT_EQ(static_cast<int>(loaded.transcript.size()), 10 + bot);
    EXPECT_EQ(loaded.transcript, engine.transcript());
}

TEST(Persist, BuffersWhileUnwritableThenFlushes) {
    const auto dir = temp_dir("buffer");
    const auto path = dir / "later" / "s.jsonl";
    SessionLog log(path);
    EXPECT_TRUE(log.last_error().has_value());
    log.append(Utterance{1, "A", UtteranceKind::Human, "hi", 1, 0});
    log.append(Utterance{2, "B", UtteranceKind::Human, "yo", 1, 0});
    EXPECT_EQ(log.pending_lines(), 2u);
    EXPECT_TRUE(log.last_error().has_value());
    fs::create_directories(dir / "later");
    log.append(Utterance{3, "C", UtteranceKind::Human, "hey", 1, 0});
    EXPECT_EQ(log.pending_lines(), 0u);
    EXPECT_FALSE(log.last_error().has_value());
    EXPECT_EQ(read_lines(path).size(), 3u);
}

TEST(Engine, ExactlyOnceCycles) {
    std::mt19937 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        auto provider = make_synthetic_provider();
        LlmClient client(*provider);
        auto cfg = derive_config(3 + trial % 6, trial % 2 ? Profile::Medium : Profile::Small, {"t", {"a", "b", "c"}});
        SessionEngine engine(cfg, client);
        engine.start();
        int plain = 0;
        int pings = 0;
        for (int i = 0; i < 60; ++i) {
            const bool ping = rng() % 7 == 0;
            const std::string text = ping ? "@MUBOT what now" : "plain message";
            const auto before = engine.cycles();
            const auto replies = engine.process("U" + std::to_string(rng() % 5), text);
            ping ? ++pings : ++plain;
            ASSERT_LE(replies.size(), 1u);
            ASSERT_LE(engine.cycles() - before, 1);
            ASSERT_GE(engine.pending(), 0);
            ASSERT_LT(engine.pending(), cfg.n_exe);
        }
        EXPECT_EQ(engine.cycles(), plain / cfg.n_exe + pings);
        int bots = 0;
        for (const auto& u : engine.transcript()) bots += u.kind == UtteranceKind::Bot;
        int spoke = 0;
        for (const auto& d : engine.decisions()) spoke += !d.decision.response.empty();
        EXPECT_EQ(bots, spoke);
    }
}

TEST(Engine, PingDoesNotTouchCounter) {
    auto provider = make_synthetic_provider();
    LlmClient client(*provider);
    SessionEngine engine(config4(), client);
    engine.start();
    engine.process("A", "one");
    engine.process("B", "two");
    EXPECT_EQ(engine.pending(), 2);
    engine.process("C", "@mubot summarize votes");
    EXPECT_EQ(engine.pending(), 2);
    EXPECT_EQ(engine.decisions().back().decision.chosen, StrategyKind::DirectChatting);
    engine.process("D", "three");
    EXPECT_EQ(engine.pending(), 0);
    EXPECT_EQ(engine.cycles(), 2);
}

TEST(Engine, EmptyResponseDowngradesToSilence) {
    ScriptedProvider provider(false);
    provider.set_fallback("");
    LlmClient client(provider);
    SessionEngine engine(config4(), client);
    engine.start();
    const auto replies = engine.process("A", "@mubot hello?");
    EXPECT_TRUE(replies.empty());
    const auto& d = engine.decisions().back();
    EXPECT_EQ(d.decision.chosen, StrategyKind::KeepSilent);
    EXPECT_FALSE(d.warnings.empty());
    EXPECT_EQ(engine.trigger_state().n_silent, 1);
}

TEST(Engine, AllQuietCycleIncrementsSilence) {
    ScriptedProvider provider(false);
    provider.set_fallback("ANSWER: none");
    LlmClient client(provider);
    SessionEngine engine(config4(), client);
    engine.start();
    for (const char* who : {"A", "B", "C"}) engine.process(who, "ok");
    EXPECT_EQ(engine.decisions().back().decision.chosen, StrategyKind::KeepSilent);
    EXPECT_EQ(engine.trigger_state().n_silent, 1);
}

TEST(Engine, RejectsUseBeforeStart) {
    ScriptedProvider provider;
    LlmClient client(provider);
    SessionEngine engine(config4(), client);
    EXPECT_THROW(engine.ingest_human("A", "hi"), Error);
}

TEST(Replay, SimulatedSessionReplaysIdentically) {
    const auto dir = temp_dir("replay");
    auto cfg = cli::resolve_config(std::nullopt, {{"topic", "book exchange"}, {"participants", 4}});
    auto provider = make_synthetic_provider();
    cli::SimulateOptions opts;
    opts.turns = 90;
    opts.seed = 7;
    opts.out = dir / "s.jsonl";
    const auto summary = cli::simulate(cfg, *provider, opts);
    ASSERT_GT(summary.cycles, 20);

    const auto session = load_session(opts.out);
    auto script = ScriptedProvider::from_replay(ReplayLog::load(summary.llm_log_path));
    const auto outcome = replay_session(session, *script);
    for (const auto& d : outcome.differences) ADD_FAILURE() << d;
    EXPECT_TRUE(outcome.identical());
    EXPECT_EQ(outcome.cycles, summary.cycles);
}

TEST(Replay, DetectsTamperedDecision) {
    const auto dir = temp_dir("tamper");
    auto cfg = cli::resolve_config(std::nullopt, {{"topic", "book exchange"}, {"participants", 4}});
    auto provider = make_synthetic_provider();
    cli::SimulateOptions opts;
    opts.turns = 30;
    opts.seed = 1;
    opts.out = dir / "s.jsonl";
    const auto summary = cli::simulate(cfg, *provider, opts);
    auto lines = read_lines(opts.out);
    for (auto& l : lines) {
        auto j = nlohmann::json::parse(l);
        if (j["record"] == "decision") {
            j["utterance_index"] = 999;
            l = j.dump();
            break;
        }
    }
    auto script = ScriptedProvider::from_replay(ReplayLog::load(summary.llm_log_path));
    EXPECT_FALSE(replay_session(parse_session_lines(lines), *script).identical());
}

TEST(Replay, MetricsMatchLiveTranscript) {
    const auto dir = temp_dir("metrics_replay");
    auto provider = make_synthetic_provider();
    LlmClient client(*provider);
    SessionLog log(dir / "s.jsonl");
    SessionEngine engine(config4(), client, &log);
    engine.start();
    const char* who[] = {"A", "B", "C", "D"};
    for (int i = 0; i < 40; ++i) engine.process(who[i % 3 + (i % 11 == 0)], oracle::words(1 + i % 9));
    const std::vector<Transcript> live = {engine.transcript()};
    const std::vector<Transcript> replayed = {load_session(dir / "s.jsonl").transcript};
    EXPECT_EQ(metrics::words_per_conversation(live), metrics::words_per_conversation(replayed));
    EXPECT_EQ(metrics::words_per_utterance(live), metrics::words_per_utterance(replayed));
    EXPECT_EQ(metrics::evenness_std_pct(live[0]), metrics::evenness_std_pct(replayed[0]));
}
