#include "muca/cli.hpp"
#include "muca/session.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace muca;
namespace fs = std::filesystem;

namespace {

struct Run {
    int rc = 0;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int rc = cli::dispatch(args, out, err);
    return {rc, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

fs::path temp_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / ("muca_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST(Cli, GenConfigSmall) {
    const auto r = run({"gen-config", "--profile", "small", "--participants", "4"});
    ASSERT_EQ(r.rc, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["n_sw"], 8);
    EXPECT_EQ(j["n_exe"], 3);
    EXPECT_EQ(j["n_lw"], 80);
}

TEST(Cli, GenConfigMediumRoundTripsThroughLoader) {
    const auto dir = temp_dir("gen");
    const auto r = run({"gen-config", "--profile", "medium", "--participants", "8", "--out", (dir / "c.json").string()});
    ASSERT_EQ(r.rc, 0) << r.err;
    const auto c = load_app_config(dir / "c.json");
    EXPECT_EQ(c.session.n_sw, 16);
    EXPECT_EQ(c.session.n_exe, 6);
}

TEST(Cli, SimulateTwiceIdentical) {
    const auto dir = temp_dir("sim");
    for (const char* name : {"a", "b"}) {
        const auto r = run({"simulate", "--turns", "150", "--seed", "7", "--out", (dir / (std::string(name) + ".jsonl")).string()});
        ASSERT_EQ(r.rc, 0) << r.err;
    }
    EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "b.jsonl"));
    EXPECT_EQ(slurp(dir / "a.llm.jsonl"), slurp(dir / "b.llm.jsonl"));
    EXPECT_FALSE(slurp(dir / "a.jsonl").empty());
    EXPECT_TRUE(fs::exists(dir / "a.profiles.json"));

    const auto rep = run({"replay", "--log", (dir / "a.jsonl").string()});
    EXPECT_EQ(rep.rc, 0) << rep.out;
    EXPECT_NE(rep.out.find("identical"), std::string::npos);

    const auto scripted = run({"simulate", "--turns", "150", "--seed", "7", "--script", (dir / "a.llm.jsonl").string(),
                               "--out", (dir / "c.jsonl").string()});
    ASSERT_EQ(scripted.rc, 0) << scripted.err;
    EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "c.jsonl"));
}

TEST(Cli, AnalyzeSkipsNonSessionFiles) {
    const auto dir = temp_dir("analyze");
    ASSERT_EQ(run({"simulate", "--turns", "30", "--seed", "2", "--out", (dir / "s.jsonl").string()}).rc, 0);
    std::ofstream(dir / "ann.json") << R"({"s.jsonl":{"agreements":2,"tasks":3}})";
    const auto r = run({"analyze", "--logs", (dir / "*.jsonl").string(), "--annotations", (dir / "ann.json").string(),
                        "--out", (dir / "report.json").string()});
    ASSERT_EQ(r.rc, 0) << r.err;
    EXPECT_NE(r.out.find("skipping"), std::string::npos);
    EXPECT_NE(r.out.find("66.7"), std::string::npos);
    const auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
    EXPECT_EQ(rep["transcripts"].size(), 1u);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({"frobnicate"}).rc, 2);
    EXPECT_EQ(run({}).rc, 2);
    EXPECT_EQ(run({"gen-config"}).rc, 2);
    EXPECT_EQ(run({"gen-config", "--participants", "1"}).rc, 2);
    EXPECT_EQ(run({"simulate", "--turns", "0"}).rc, 2);
    const auto r = run({"frobnicate"});
    EXPECT_NE(r.err.find("serve"), std::string::npos);
}

TEST(Cli, RuntimeErrorsExitOne) {
    EXPECT_EQ(run({"replay", "--log", "/nonexistent/x.jsonl"}).rc, 1);
    EXPECT_EQ(run({"serve", "--config", "/nonexistent/c.json"}).rc, 1);
    EXPECT_EQ(run({"analyze", "--logs", "/nonexistent/*.jsonl"}).rc, 1);
}

TEST(Cli, HelpExitsZero) {
    const auto r = run({"--help"});
    EXPECT_EQ(r.rc, 0);
    EXPECT_NE(r.out.find("simulate"), std::string::npos);
}

TEST(Cli, SiblingPath) {
    EXPECT_EQ(cli::sibling_path("/tmp/run.jsonl", "llm.jsonl"), fs::path("/tmp/run.llm.jsonl"));
    EXPECT_EQ(cli::default_user_names(2), (std::vector<std::string>{"Alex", "Blake"}));
}
