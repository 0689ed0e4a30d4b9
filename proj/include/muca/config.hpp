#pragma once

#include "muca/core.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace muca {

struct ProviderSettings {
    std::string kind = "synthetic";  // synthetic | scripted | openai
    std::string script;              // replay log for kind = scripted
    bool strict = true;
    std::string base_url = "https://api.openai.com";
    std::string model = "gpt-4";
    std::string api_key_env = "OPENAI_API_KEY";
    int timeout_s = 60;
};

struct SimulationSettings {
    std::vector<std::string> users;   // virtual user names; defaults to User1..P
    std::string snippets;             // path to chat snippets (JSON)
    double boost_min = 1.0;
    double boost_avg = 1.0;
    double boost_max = 1.0;
    int behavior_cooldown = 3;
    int context_turns = 16;
    bool clip_lengths = false;
};

/// Everything a config file can carry.
struct AppConfig {
    SessionConfig session;
    ProviderSettings provider;
    SimulationSettings simulation;
    std::string transcript_path;
};

nlohmann::json to_json(const ArbitrationParams& p);
nlohmann::json to_json(const SessionConfig& c);
nlohmann::json to_json(const AppConfig& c);

/// Applies the recognised keys of `j` on top of `base`.
void apply_arbitration_overrides(ArbitrationParams& base, const nlohmann::json& j);

/// Reads the flat config-file form: profile defaults first, then explicit
/// keys. Throws ConfigError on malformed input.
AppConfig app_config_from_json(const nlohmann::json& j);
SessionConfig session_config_from_json(const nlohmann::json& j);

AppConfig load_app_config(const std::filesystem::path& path);

/// Selects the provider kind from MUCA_PROVIDER when set.
void apply_environment(ProviderSettings& settings);

}  // namespace muca
