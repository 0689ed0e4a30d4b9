#pragma once

#include "muca/core.hpp"
#include "muca/llm.hpp"
#include "muca/session.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

// Multi-user simulator: virtual users modeled from chat snippets, talking to
// the session engine in development mode.
namespace muca::mus {

using Rng = std::mt19937_64;

inline constexpr int kSubsetSize = 6;

const std::vector<std::string>& default_roles();
const std::vector<std::string>& default_traits();

struct SnippetTurn {
    std::string speaker;
    std::string text;
};

struct ChatSnippet {
    std::vector<SnippetTurn> turns;
};

/// Reads `[{"turns": [{"speaker": .., "text": ..}, ..]}, ..]` (a bare array
/// of turns per snippet is accepted too).
std::vector<ChatSnippet> snippets_from_json(const nlohmann::json& j);
std::vector<ChatSnippet> load_snippets(const std::filesystem::path& path);
/// Three short built-in snippets used when none are configured.
const std::vector<ChatSnippet>& default_snippets();

/// Throws ParameterError unless there are 1-5 snippets of 10-30 turns.
void validate_snippets(std::span<const ChatSnippet> snippets);

// +-----------------------------------+
// |         Utterance lengths         |
// +-----------------------------------+

struct LengthParams {
    int l_min = 1;
    int l_avg = 1;
    int l_max = 1;
    double mix_weight = 0.3;
    double sigma_scale = 0.67;
    double mu = 0.0;
    double sigma = 0.0;
};

/// mu = ln(w*l_min + (1-w)*l_avg), sigma = scale*(ln l_max - mu).
LengthParams length_params(int l_min, int l_avg, int l_max, double mix_weight = 0.3, double sigma_scale = 0.67);

enum class Truncation { Reject, Clip };

/// Rounded log-normal draw inside [l_min, l_max]. Out-of-range draws are
/// redrawn (Reject) or pinned to the nearer bound (Clip).
int sample_length(const LengthParams& params, Rng& rng, Truncation mode = Truncation::Reject);

/// Word-count statistics of one speaker (or everyone) across snippets.
struct LengthStats {
    int l_min = 0;
    double l_avg = 0.0;
    int l_max = 0;
    std::size_t utterances = 0;
};

LengthStats snippet_length_stats(std::span<const ChatSnippet> snippets, std::optional<std::string> speaker = {});

struct LengthBoost {
    double min = 1.0;
    double avg = 1.0;
    double max = 1.0;
};

/// Scales the statistics, rounds, and restores l_min <= l_avg <= l_max.
LengthParams boosted_params(const LengthStats& stats, const LengthBoost& boost);

// +-----------------------------------+
// |          Virtual users            |
// +-----------------------------------+

struct VirtualUserProfile {
    std::string name;
    std::vector<std::string> roles;
    std::vector<std::string> traits;
    LengthParams length;
};

nlohmann::json to_json(const VirtualUserProfile& p);
nlohmann::json profiles_to_json(std::span<const VirtualUserProfile> profiles);

enum class Behavior { AskingQuestions = 0, DirectChatting = 1, TopicTransition = 2 };
inline constexpr std::size_t kBehaviorCount = 3;

std::optional<Behavior> behavior_for_role(std::string_view role);

/// Remaining cool-down turns per virtual user and behavior.
class RoleCooldowns {
public:
    explicit RoleCooldowns(int length = 3) : length_(length) {}

    bool blocked(const std::string& user, std::string_view role) const;
    int remaining(const std::string& user, Behavior b) const;
    /// One simulated turn: every counter drops by one, then the behavior of
    /// the chosen role (if any) is put on cool-down for `user`.
    void advance(const std::string& user, std::string_view role);

private:
    int length_;
    std::map<std::string, std::array<int, kBehaviorCount>> counters_;
};

struct MusSettings {
    std::vector<std::string> roles = default_roles();
    std::vector<std::string> traits = default_traits();
    LengthBoost boost;
    int behavior_cooldown = 3;
    int context_turns = 16;
    Truncation truncation = Truncation::Reject;
    int questioner_min_words = 6;
};

/// Chooses roles and traits per user with the provider (one re-prompt on
/// names outside the catalogues, then a random fill) and derives length
/// parameters from the snippets.
std::vector<VirtualUserProfile> model_user_behavior(std::span<const ChatSnippet> snippets,
                                                    const std::vector<std::string>& users,
                                                    const MusSettings& settings, LlmClient& client, Rng& rng,
                                                    Diagnostics& diag);

struct SpeakerChoice {
    std::string user;
    std::string role;
    bool fallback = false;
};

struct TurnContext {
    const SessionConfig* config = nullptr;
    std::span<const Utterance> window;
    std::string summary;
    std::optional<std::string> last_speaker;
};

/// Provider proposes the speaker, then the role. Invalid proposals (last
/// speaker, the bot, unknown names) fall back to a random valid user.
SpeakerChoice select_next_speaker(const TurnContext& ctx, std::span<const VirtualUserProfile> profiles,
                                  const RoleCooldowns& cooldowns, LlmClient& client, Rng& rng, Diagnostics& diag);

int word_budget(std::string_view role, int length, const MusSettings& settings);

/// Trait first, then the utterance. Returns nothing when the provider
/// answers empty twice.
std::optional<std::string> generate_utterance(const TurnContext& ctx, const VirtualUserProfile& profile,
                                              const std::string& role, int length, LlmClient& client, Rng& rng,
                                              Diagnostics& diag);

// +-----------------------------------+
// |            Simulation             |
// +-----------------------------------+

struct SimulationResult {
    int human_turns = 0;
    int skipped_turns = 0;
    std::vector<std::string> warnings;
};

/// Drives a started engine for `turns` virtual turns. Cycles run through
/// the same engine calls the chat server uses.
SimulationResult run_simulation(SessionEngine& engine, std::span<const VirtualUserProfile> profiles,
                                const MusSettings& settings, int turns, Rng& rng, LlmClient& client);

}  // namespace muca::mus
