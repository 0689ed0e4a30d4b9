#include "muca/config.hpp"

#include <cstdlib>
#include <fstream>

namespace muca {

using json = nlohmann::json;

namespace {

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) {
        try {
            out = it->get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config key '") + key + "': " + e.what());
        }
    }
}

}  // namespace

json to_json(const ArbitrationParams& p) {
    json ranks = json::object();
    for (auto k : kAllStrategies) ranks[std::string(to_string(k))] = p.rank(k);
    return {{"thre_freq_lt", p.thre_freq_lt},
            {"thre_len_lt", p.thre_len_lt},
            {"thre_freq_st", p.thre_freq_st},
            {"thre_len_st", p.thre_len_st},
            {"silence_alpha", p.silence_alpha},
            {"semantic_beta", p.semantic_beta},
            {"chime_threshold", p.chime_threshold},
            {"warmup_summarization", p.warmup_summarization},
            {"cooldown_summarization", p.cooldown_summarization},
            {"warmup_encouragement", p.warmup_encouragement},
            {"encouragement_cooldown_increment", p.encouragement_cooldown_increment},
            {"warmup_transition", p.warmup_transition},
            {"cooldown_transition", p.cooldown_transition},
            {"warmup_conflict", p.warmup_conflict},
            {"conflict_stall_window", p.conflict_stall_window},
            {"n_active_required", p.n_active_required},
            {"ranks", ranks}};
}

json to_json(const SessionConfig& c) {
    json j = {{"topic", c.inputs.topic},
              {"agenda", c.inputs.agenda},
              {"hints", c.inputs.hints},
              {"attendee_roles", c.inputs.attendee_roles},
              {"profile", std::string(to_string(c.profile))},
              {"participants", c.participants},
              {"n_exe", c.n_exe},
              {"n_sw", c.n_sw},
              {"n_lw", c.n_lw},
              {"subtopic_count", c.subtopic_count},
              {"bot_keyword", c.bot_keyword},
              {"bot_name", c.bot_name},
              {"arbitration", to_json(c.arbitration)}};
    j["seed"] = c.random_seed ? json(*c.random_seed) : json(nullptr);
    return j;
}

json to_json(const AppConfig& c) {
    json j = to_json(c.session);
    j["provider"] = {{"kind", c.provider.kind},         {"script", c.provider.script},
                     {"strict", c.provider.strict},     {"base_url", c.provider.base_url},
                     {"model", c.provider.model},       {"api_key_env", c.provider.api_key_env},
                     {"timeout_s", c.provider.timeout_s}};
    j["simulation"] = {{"users", c.simulation.users},
                       {"snippets", c.simulation.snippets},
                       {"boost_min", c.simulation.boost_min},
                       {"boost_avg", c.simulation.boost_avg},
                       {"boost_max", c.simulation.boost_max},
                       {"behavior_cooldown", c.simulation.behavior_cooldown},
                       {"context_turns", c.simulation.context_turns},
                       {"clip_lengths", c.simulation.clip_lengths}};
    j["transcript_path"] = c.transcript_path;
    return j;
}

void apply_arbitration_overrides(ArbitrationParams& p, const json& j) {
    if (!j.is_object()) throw ConfigError("'arbitration' must be an object");
    read_if(j, "thre_freq_lt", p.thre_freq_lt);
    read_if(j, "thre_len_lt", p.thre_len_lt);
    read_if(j, "thre_freq_st", p.thre_freq_st);
    read_if(j, "thre_len_st", p.thre_len_st);
    read_if(j, "silence_alpha", p.silence_alpha);
    read_if(j, "semantic_beta", p.semantic_beta);
    read_if(j, "chime_threshold", p.chime_threshold);
    read_if(j, "warmup_summarization", p.warmup_summarization);
    read_if(j, "cooldown_summarization", p.cooldown_summarization);
    read_if(j, "warmup_encouragement", p.warmup_encouragement);
    read_if(j, "encouragement_cooldown_increment", p.encouragement_cooldown_increment);
    read_if(j, "warmup_transition", p.warmup_transition);
    read_if(j, "cooldown_transition", p.cooldown_transition);
    read_if(j, "warmup_conflict", p.warmup_conflict);
    read_if(j, "conflict_stall_window", p.conflict_stall_window);
    read_if(j, "n_active_required", p.n_active_required);
    if (auto it = j.find("ranks"); it != j.end()) {
        if (!it->is_object()) throw ConfigError("'arbitration.ranks' must be an object");
        for (const auto& [name, value] : it->items()) {
            const auto k = parse_strategy(name);
            if (!k) throw ConfigError("unknown strategy '" + name + "' in ranks");
            p.ranks[strategy_slot(*k)] = value.get<int>();
        }
    }
}

SessionConfig session_config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    TopicInputs inputs;
    read_if(j, "topic", inputs.topic);
    read_if(j, "agenda", inputs.agenda);
    read_if(j, "hints", inputs.hints);
    read_if(j, "attendee_roles", inputs.attendee_roles);

    std::string profile = "small";
    int participants = 0;
    read_if(j, "profile", profile);
    read_if(j, "participants", participants);

    auto c = derive_config(participants, parse_profile(profile), std::move(inputs));
    read_if(j, "n_exe", c.n_exe);
    if (j.contains("n_sw") && !j["n_sw"].is_null()) {
        read_if(j, "n_sw", c.n_sw);
        c.n_lw = 10 * c.n_sw;
    }
    read_if(j, "subtopic_count", c.subtopic_count);
    read_if(j, "bot_keyword", c.bot_keyword);
    read_if(j, "bot_name", c.bot_name);
    if (auto it = j.find("seed"); it != j.end() && !it->is_null()) c.random_seed = it->get<std::uint64_t>();
    if (auto it = j.find("arbitration"); it != j.end()) apply_arbitration_overrides(c.arbitration, *it);
    c.validate();
    return c;
}

AppConfig app_config_from_json(const json& j) {
    AppConfig c;
    c.session = session_config_from_json(j);
    if (auto it = j.find("provider"); it != j.end()) {
        const auto& p = *it;
        read_if(p, "kind", c.provider.kind);
        read_if(p, "script", c.provider.script);
        read_if(p, "strict", c.provider.strict);
        read_if(p, "base_url", c.provider.base_url);
        read_if(p, "model", c.provider.model);
        read_if(p, "api_key_env", c.provider.api_key_env);
        read_if(p, "timeout_s", c.provider.timeout_s);
    }
    if (auto it = j.find("simulation"); it != j.end()) {
        const auto& s = *it;
        read_if(s, "users", c.simulation.users);
        read_if(s, "snippets", c.simulation.snippets);
        read_if(s, "boost_min", c.simulation.boost_min);
        read_if(s, "boost_avg", c.simulation.boost_avg);
        read_if(s, "boost_max", c.simulation.boost_max);
        read_if(s, "behavior_cooldown", c.simulation.behavior_cooldown);
        read_if(s, "context_turns", c.simulation.context_turns);
        read_if(s, "clip_lengths", c.simulation.clip_lengths);
    }
    read_if(j, "transcript_path", c.transcript_path);
    return c;
}

AppConfig load_app_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    auto c = app_config_from_json(j);
    apply_environment(c.provider);
    return c;
}

void apply_environment(ProviderSettings& settings) {
    if (const char* kind = std::getenv("MUCA_PROVIDER"); kind != nullptr && *kind != '\0') settings.kind = kind;
}

}  // namespace muca
