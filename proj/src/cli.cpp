#include "muca/cli.hpp"

#include "muca/metrics.hpp"
#include "muca/mus.hpp"
#include "muca/openai_provider.hpp"
#include "muca/server.hpp"
#include "muca/session.hpp"
#include "muca/synthetic.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace muca::cli {

using json = nlohmann::json;

namespace {

constexpr const char* kDefaultTopic = "Plan a two-day team offsite: pick a venue, an agenda and a budget split";

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::out | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out.flush()) throw Error("write to '" + path.string() + "' failed");
}

// +-----------------------------------+
// |            Subcommands            |
// +-----------------------------------+

struct ServeArgs {
    std::string config;
    int port = 8080;
    std::string address = "127.0.0.1";
    std::string log;
};

int run_serve(const ServeArgs& a, std::ostream& out) {
    const auto cfg = resolve_config(std::filesystem::path(a.config), json::object());
    const std::filesystem::path transcript =
        !a.log.empty() ? a.log : (!cfg.transcript_path.empty() ? cfg.transcript_path : "muca-session.jsonl");

    auto provider = make_provider(cfg.provider);
    ReplayLog llm_log(sibling_path(transcript, "llm.jsonl"));
    LlmClient client(*provider, {}, &llm_log);
    SessionLog log(transcript);
    if (const auto e = log.last_error()) throw Error(*e);
    SessionEngine engine(cfg.session, client, &log);
    engine.start();

    ChatServer server(engine, {a.address, static_cast<unsigned short>(a.port)});
    server.start();
    out << "muca: serving '" << cfg.session.inputs.topic << "' on ws://" << a.address << ':' << server.port()
        << "/ws (transcript " << transcript.string() << ")\n";
    for (const auto& s : engine.subtopics()) out << "  " << s.index << ". " << s.title << '\n';
    out.flush();
    server.wait();
    out << "muca: stopped after " << server.cycles_completed() << " cycles\n";
    return 0;
}

struct SimulateArgs {
    std::string config;
    std::string script;
    std::string profile;
    std::string topic;
    int participants = 0;
    SimulateOptions options;
    std::string profiles;
    std::uint64_t seed = 0;
};

int run_simulate(SimulateArgs a, std::ostream& out) {
    json overrides = json::object();
    if (!a.profile.empty()) overrides["profile"] = a.profile;
    if (a.participants > 0) overrides["participants"] = a.participants;
    if (!a.topic.empty()) overrides["topic"] = a.topic;
    std::optional<std::filesystem::path> file;
    if (!a.config.empty()) file = a.config;
    auto cfg = resolve_config(file, overrides);
    if (!a.script.empty() && a.script != "live") {
        cfg.provider.kind = "scripted";
        cfg.provider.script = a.script;
        cfg.provider.strict = true;
    }
    if (!a.profiles.empty()) a.options.profiles_out = a.profiles;

    auto provider = make_provider(cfg.provider);
    const auto summary = simulate(cfg, *provider, a.options);
    out << "simulated " << summary.human_turns << " turns";
    if (summary.skipped_turns) out << " (" << summary.skipped_turns << " skipped)";
    out << ", " << summary.cycles << " cycles\n";
    for (const auto& [name, n] : summary.strategy_counts) out << "  " << name << ": " << n << '\n';
    out << "session: " << summary.session_path.string() << "\nprovider log: " << summary.llm_log_path.string()
        << "\nprofiles: " << summary.profiles_path.string() << '\n';
    return 0;
}

struct AnalyzeArgs {
    std::string logs;
    std::string annotations;
    std::string out;
};

int run_analyze(const AnalyzeArgs& a, std::ostream& out) {
    const auto paths = metrics::expand_glob(a.logs);
    if (paths.empty()) throw metrics::MetricsError("no session logs match '" + a.logs + "'");
    std::map<std::string, metrics::Annotation> annotations;
    if (!a.annotations.empty()) annotations = metrics::load_annotations(a.annotations);

    std::vector<metrics::NamedTranscript> transcripts;
    for (const auto& p : paths) {
        auto session = load_session(p);
        if (!session.config) {
            out << "skipping " << p.string() << ": not a session log\n";
            continue;
        }
        transcripts.push_back({p.string(), std::move(session.transcript)});
    }
    const auto report = metrics::build_report(transcripts, annotations);
    out << metrics::format_table(report);
    if (!a.out.empty()) write_text(a.out, metrics::to_json(report).dump(2) + "\n");
    return 0;
}

struct ReplayArgs {
    std::string log;
    std::string llm_log;
};

int run_replay(const ReplayArgs& a, std::ostream& out) {
    const auto session = load_session(a.log);
    const std::filesystem::path llm = a.llm_log.empty() ? sibling_path(a.log, "llm.jsonl") : std::filesystem::path(a.llm_log);
    auto provider = ScriptedProvider::from_replay(ReplayLog::load(llm));
    const auto outcome = replay_session(session, *provider);
    out << "replayed " << outcome.cycles << " of " << outcome.recorded_cycles << " recorded cycles\n";
    for (const auto& d : outcome.differences) out << "  " << d << '\n';
    out << (outcome.identical() ? "identical\n" : "diverged\n");
    return outcome.identical() ? 0 : 1;
}

struct GenConfigArgs {
    std::string profile = "small";
    int participants = 0;
    std::string topic;
    std::string out;
};

int run_gen_config(const GenConfigArgs& a, std::ostream& out) {
    json overrides = {{"profile", a.profile}, {"participants", a.participants}};
    if (!a.topic.empty()) overrides["topic"] = a.topic;
    const auto cfg = resolve_config(std::nullopt, overrides);
    const auto text = to_json(cfg).dump(2) + "\n";
    if (a.out.empty()) {
        out << text;
    } else {
        write_text(a.out, text);
    }
    return 0;
}

}  // namespace

std::unique_ptr<Provider> make_provider(const ProviderSettings& s) {
    if (s.kind == "synthetic") return make_synthetic_provider();
    if (s.kind == "scripted") {
        if (s.script.empty()) throw ConfigError("provider kind 'scripted' needs a script file");
        auto p = ScriptedProvider::from_replay(ReplayLog::load(s.script));
        p->set_strict(s.strict);
        return p;
    }
    if (s.kind == "openai") {
        const char* key = std::getenv(s.api_key_env.c_str());
        if (key == nullptr || *key == '\0') throw ConfigError("environment variable " + s.api_key_env + " is not set");
        return std::make_unique<OpenAiProvider>(OpenAiSettings{s.base_url, s.model, key, s.timeout_s, 0.0});
    }
    throw ConfigError("unknown provider kind '" + s.kind + "' (expected synthetic, scripted or openai)");
}

std::vector<std::string> default_user_names(int n) {
    static const std::vector<std::string> names = {"Alex", "Blake", "Casey", "Drew",  "Emery", "Finley",
                                                   "Gray", "Harper", "Indy", "Jules", "Kai",   "Lane"};
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) {
        out.push_back(i < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(i)]
                                                         : "User" + std::to_string(i + 1));
    }
    return out;
}

std::filesystem::path sibling_path(const std::filesystem::path& session, std::string_view suffix) {
    auto p = session;
    p.replace_filename(session.stem().string() + "." + std::string(suffix));
    return p;
}

AppConfig resolve_config(const std::optional<std::filesystem::path>& file, const json& overrides) {
    json j = file ? read_json_file(*file) : json{{"topic", kDefaultTopic}, {"participants", 4}};
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    j.update(overrides);
    auto cfg = app_config_from_json(j);
    apply_environment(cfg.provider);
    return cfg;
}

SimulateSummary simulate(const AppConfig& config, Provider& provider, const SimulateOptions& options) {
    if (options.turns < 1) throw ParameterError("--turns must be at least 1");
    SimulateSummary summary;
    summary.session_path = options.out;
    summary.llm_log_path = options.llm_log_out.value_or(sibling_path(options.out, "llm.jsonl"));
    summary.profiles_path = options.profiles_out.value_or(sibling_path(options.out, "profiles.json"));

    const auto& sim = config.simulation;
    const auto users = sim.users.empty() ? default_user_names(config.session.participants) : sim.users;
    const auto snippets = sim.snippets.empty() ? mus::default_snippets() : mus::load_snippets(sim.snippets);
    mus::MusSettings settings;
    settings.boost = {sim.boost_min, sim.boost_avg, sim.boost_max};
    settings.behavior_cooldown = sim.behavior_cooldown;
    settings.context_turns = sim.context_turns;
    settings.truncation = sim.clip_lengths ? mus::Truncation::Clip : mus::Truncation::Reject;

    std::int64_t llm_tick = 0;
    std::int64_t chat_tick = 0;
    ReplayLog llm_log(summary.llm_log_path);
    LlmClient client(provider, {}, &llm_log);
    client.set_clock([&llm_tick] { return ++llm_tick * 1000; });
    SessionLog log(summary.session_path);
    if (const auto e = log.last_error()) throw Error(*e);
    SessionEngine engine(config.session, client, &log, [&chat_tick] { return ++chat_tick * 1000; });

    mus::Rng rng(options.seed.value_or(config.session.random_seed.value_or(0)));
    Diagnostics diag;
    const auto profiles = mus::model_user_behavior(snippets, users, settings, client, rng, diag);
    engine.start();
    const auto result = mus::run_simulation(engine, profiles, settings, options.turns, rng, client);
    write_text(summary.profiles_path, mus::profiles_to_json(profiles).dump(2) + "\n");

    summary.human_turns = result.human_turns;
    summary.skipped_turns = result.skipped_turns;
    for (const auto& d : engine.decisions()) ++summary.strategy_counts[std::string(to_string(d.decision.chosen))];
    summary.cycles = engine.cycles();
    if (const auto e = log.last_error()) throw Error(*e);
    return summary;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"MUCA: multi-user chat assistant", "muca"};
    app.require_subcommand(1);

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the WebSocket chat server");
    serve_cmd->add_option("--config", serve.config, "Session config file (JSON)")->required();
    serve_cmd->add_option("--port", serve.port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--address", serve.address, "Listen address");
    serve_cmd->add_option("--log", serve.log, "Session transcript file (overrides transcript_path)");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a simulated session with virtual users");
    sim_cmd->add_option("--config", sim.config, "Session config file (JSON)");
    sim_cmd->add_option("--turns", sim.options.turns, "Virtual user turns")->check(CLI::PositiveNumber);
    auto* seed_opt = sim_cmd->add_option("--seed", sim.seed, "Random seed");
    sim_cmd->add_option("--script", sim.script, "Provider log to replay, or 'live' for the configured provider");
    sim_cmd->add_option("--out", sim.options.out, "Session transcript file");
    sim_cmd->add_option("--profiles", sim.profiles, "Virtual user profiles file");
    sim_cmd->add_option("--participants", sim.participants, "Number of virtual users")->check(CLI::Range(2, 64));
    sim_cmd->add_option("--profile", sim.profile, "Sizing profile")->check(CLI::IsMember({"small", "medium"}));
    sim_cmd->add_option("--topic", sim.topic, "Discussion topic");

    AnalyzeArgs analyze;
    auto* analyze_cmd = app.add_subcommand("analyze", "Compute conversation metrics over session logs");
    analyze_cmd->add_option("--logs", analyze.logs, "Glob of session logs")->required();
    analyze_cmd->add_option("--annotations", analyze.annotations, "Consensus annotations file (JSON)");
    analyze_cmd->add_option("--out", analyze.out, "Report file (JSON)");

    ReplayArgs replay;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run a persisted session and compare decisions");
    replay_cmd->add_option("--log", replay.log, "Session transcript file")->required();
    replay_cmd->add_option("--llm-log", replay.llm_log, "Provider log (default: <session>.llm.jsonl)");

    GenConfigArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-config", "Print a config with profile defaults");
    gen_cmd->add_option("--profile", gen.profile, "Sizing profile")->check(CLI::IsMember({"small", "medium"}));
    gen_cmd->add_option("--participants", gen.participants, "Number of participants")->required()->check(CLI::Range(2, 64));
    gen_cmd->add_option("--topic", gen.topic, "Discussion topic");
    gen_cmd->add_option("--out", gen.out, "Output file (default: stdout)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "muca: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (serve_cmd->parsed()) return run_serve(serve, out);
        if (sim_cmd->parsed()) {
            if (seed_opt->count() > 0) sim.options.seed = sim.seed;
            return run_simulate(sim, out);
        }
        if (analyze_cmd->parsed()) return run_analyze(analyze, out);
        if (replay_cmd->parsed()) return run_replay(replay, out);
        if (gen_cmd->parsed()) return run_gen_config(gen, out);
    } catch (const std::exception& e) {
        err << "muca: " << e.what() << '\n';
        return 1;
    }
    err << app.help();
    return 2;
}

}  // namespace muca::cli
