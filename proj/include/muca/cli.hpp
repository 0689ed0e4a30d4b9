#pragma once

#include "muca/config.hpp"
#include "muca/llm.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace muca::cli {

/// Runs one subcommand. Exit codes: 0 success, 1 runtime error, 2 usage.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Provider for a configuration: synthetic, scripted (strict replay of a
/// provider log) or openai (key read from the configured variable).
std::unique_ptr<Provider> make_provider(const ProviderSettings& settings);

/// Default virtual-user names for `n` participants.
std::vector<std::string> default_user_names(int n);

/// `<dir>/<stem>.<suffix>` next to a session file, e.g. the provider log
/// "run.llm.jsonl" for "run.jsonl".
std::filesystem::path sibling_path(const std::filesystem::path& session, std::string_view suffix);

struct SimulateOptions {
    int turns = 150;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out = "muca-sim.jsonl";
    std::optional<std::filesystem::path> profiles_out;
    std::optional<std::filesystem::path> llm_log_out;
};

struct SimulateSummary {
    int human_turns = 0;
    int skipped_turns = 0;
    int cycles = 0;
    std::map<std::string, int> strategy_counts;
    std::filesystem::path session_path;
    std::filesystem::path llm_log_path;
    std::filesystem::path profiles_path;
};

/// The `simulate` subcommand minus argument parsing. Deterministic for a
/// fixed seed and a deterministic provider: the logical clock advances one
/// second per utterance.
SimulateSummary simulate(const AppConfig& config, Provider& provider, const SimulateOptions& options);

/// Config file (or defaults) with command-line overrides applied on top,
/// then profile defaults derived for whatever is still unset.
AppConfig resolve_config(const std::optional<std::filesystem::path>& file, const nlohmann::json& overrides);

}  // namespace muca::cli
