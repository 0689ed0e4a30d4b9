#include "muca/mus.hpp"

#include "muca/analyzer.hpp"
#include "muca/prompts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace muca::mus {

using json = nlohmann::json;

namespace {

std::string join(std::span<const std::string> items, std::string_view sep = ", ") {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss{std::string(text)};
    while (std::getline(ss, item, ',')) {
        auto t = trim(item);
        if (!t.empty()) out.push_back(to_lower(t));
    }
    return out;
}

bool in_catalogue(const std::vector<std::string>& catalogue, const std::string& name) {
    return std::find(catalogue.begin(), catalogue.end(), name) != catalogue.end();
}

template <typename T>
const T& pick(std::span<const T> items, Rng& rng) {
    std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
    return items[d(rng)];
}

// Keeps the distinct catalogue names in order, then fills randomly from the
// rest of the catalogue up to `count`.
std::vector<std::string> repair_subset(const std::vector<std::string>& proposed,
                                       const std::vector<std::string>& catalogue, std::size_t count, Rng& rng) {
    std::vector<std::string> out;
    for (const auto& p : proposed) {
        if (out.size() == count) break;
        if (in_catalogue(catalogue, p) && !in_catalogue(out, p)) out.push_back(p);
    }
    std::vector<std::string> rest;
    for (const auto& c : catalogue) {
        if (!in_catalogue(out, c)) rest.push_back(c);
    }
    std::shuffle(rest.begin(), rest.end(), rng);
    for (std::size_t i = 0; out.size() < count && i < rest.size(); ++i) out.push_back(rest[i]);
    return out;
}

bool valid_subset(const std::vector<std::string>& items, const std::vector<std::string>& catalogue,
                  std::size_t count) {
    if (items.size() != count) return false;
    std::set<std::string> seen;
    for (const auto& i : items) {
        if (!in_catalogue(catalogue, i) || !seen.insert(i).second) return false;
    }
    return true;
}

std::string format_snippets(std::span<const ChatSnippet> snippets) {
    std::string out;
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        out += "Snippet " + std::to_string(i + 1) + ":\n";
        for (const auto& t : snippets[i].turns) out += t.speaker + ": " + t.text + "\n";
    }
    return out;
}

// Speakers in order of first appearance.
std::vector<std::string> snippet_speakers(std::span<const ChatSnippet> snippets) {
    std::vector<std::string> out;
    for (const auto& s : snippets) {
        for (const auto& t : s.turns) {
            if (!in_catalogue(out, t.speaker)) out.push_back(t.speaker);
        }
    }
    return out;
}

std::string match_name(std::string_view answer, std::span<const std::string> names) {
    const auto a = to_lower(trim(answer));
    for (const auto& n : names) {
        if (a == to_lower(n)) return n;
    }
    // Tolerate trailing punctuation or a sentence around the name.
    std::string best;
    for (const auto& n : names) {
        if (contains_icase(a, n) && n.size() > best.size()) best = n;
    }
    return best;
}

}  // namespace

const std::vector<std::string>& default_roles() {
    static const std::vector<std::string> roles = {
        "questioner", "proposer",          "supporter", "skeptic",  "summarizer",     "decision-pusher",
        "detail-asker", "off-topic drifter", "agree-er", "disagree-er", "direct-chatter"};
    return roles;
}

const std::vector<std::string>& default_traits() {
    static const std::vector<std::string> traits = {"laconic", "verbose", "formal", "casual",  "hedging",
                                                    "assertive", "humorous", "polite", "blunt", "inquisitive"};
    return traits;
}

// +-----------------------------------+
// |             Snippets              |
// +-----------------------------------+

std::vector<ChatSnippet> snippets_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("snippets must be a JSON array");
    std::vector<ChatSnippet> out;
    for (const auto& s : j) {
        const json& turns = s.is_object() ? s.at("turns") : s;
        ChatSnippet snippet;
        for (const auto& t : turns) {
            snippet.turns.push_back({t.at("speaker").get<std::string>(), t.at("text").get<std::string>()});
        }
        out.push_back(std::move(snippet));
    }
    return out;
}

std::vector<ChatSnippet> load_snippets(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read snippets file '" + path.string() + "'");
    try {
        return snippets_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw ConfigError("snippets file '" + path.string() + "': " + e.what());
    }
}

const std::vector<ChatSnippet>& default_snippets() {
    static const std::vector<ChatSnippet> snippets = [] {
        const std::vector<std::vector<SnippetTurn>> raw = {
            {{"Ann", "so where do we want to go this time"},
             {"Bo", "I'd vote for somewhere near the lake, last year was great"},
             {"Cy", "lake works"},
             {"Ann", "ok but how many nights"},
             {"Dee", "two nights max for me, I have work on monday"},
             {"Bo", "two is fine"},
             {"Cy", "who is driving though"},
             {"Ann", "I can take four people in my car if someone shares the fuel"},
             {"Bo", "deal"},
             {"Dee", "I can bring snacks and the big cooler"},
             {"Cy", "nice"}},
            {{"Bo", "did anyone check the cabin prices"},
             {"Ann", "they went up a bit, roughly the same as the place near the hills"},
             {"Dee", "then the lake, it has the boat rental"},
             {"Cy", "agreed"},
             {"Bo", "should we book today before it fills up"},
             {"Ann", "yes let's not wait again like last time when everything was gone"},
             {"Dee", "I'll send the link"},
             {"Cy", "thanks"},
             {"Bo", "and food, are we cooking or eating out"},
             {"Ann", "cooking is cheaper and more fun honestly"},
             {"Cy", "cooking then"}},
            {{"Dee", "quick one, what time do we leave friday"},
             {"Cy", "after lunch?"},
             {"Ann", "I finish at three so maybe four"},
             {"Bo", "four is ok, traffic might be bad though"},
             {"Dee", "fine"},
             {"Cy", "let's meet at Ann's place"},
             {"Ann", "sure, park on the street"},
             {"Bo", "I'll bring the board games"},
             {"Dee", "perfect, see you all then"},
             {"Cy", "see ya"}},
        };
        std::vector<ChatSnippet> out;
        for (const auto& turns : raw) out.push_back({turns});
        return out;
    }();
    return snippets;
}

void validate_snippets(std::span<const ChatSnippet> snippets) {
    if (snippets.empty() || snippets.size() > 5) {
        throw ParameterError("user modeling needs 1 to 5 chat snippets, got " + std::to_string(snippets.size()));
    }
    for (const auto& s : snippets) {
        if (s.turns.size() < 10 || s.turns.size() > 30) {
            throw ParameterError("chat snippets need 10 to 30 turns, got " + std::to_string(s.turns.size()));
        }
    }
}

// +-----------------------------------+
// |         Utterance lengths         |
// +-----------------------------------+

LengthParams length_params(int l_min, int l_avg, int l_max, double mix_weight, double sigma_scale) {
    if (l_min < 1 || l_min > l_avg || l_avg > l_max) {
        throw ParameterError("length parameters need 1 <= l_min <= l_avg <= l_max, got (" + std::to_string(l_min) +
                             ", " + std::to_string(l_avg) + ", " + std::to_string(l_max) + ")");
    }
    if (!(mix_weight >= 0.0 && mix_weight <= 1.0) || !(sigma_scale >= 0.0)) {
        throw ParameterError("length mix weight must be in [0, 1] and sigma scale non-negative");
    }
    LengthParams p{l_min, l_avg, l_max, mix_weight, sigma_scale, 0.0, 0.0};
    p.mu = std::log(mix_weight * l_min + (1.0 - mix_weight) * l_avg);
    p.sigma = sigma_scale * (std::log(static_cast<double>(l_max)) - p.mu);
    return p;
}

int sample_length(const LengthParams& params, Rng& rng, Truncation mode) {
    const auto clamp = [&](long v) { return static_cast<int>(std::clamp<long>(v, params.l_min, params.l_max)); };
    if (params.sigma <= 0.0) return clamp(std::lround(std::exp(params.mu)));
    std::lognormal_distribution<double> d(params.mu, params.sigma);
    if (mode == Truncation::Clip) return clamp(std::lround(d(rng)));
    // The accepted mass is at least the half above the median for any valid
    // parameters, so this loop terminates quickly in practice.
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const long v = std::lround(d(rng));
        if (v >= params.l_min && v <= params.l_max) return static_cast<int>(v);
    }
    return clamp(std::lround(std::exp(params.mu)));
}

LengthStats snippet_length_stats(std::span<const ChatSnippet> snippets, std::optional<std::string> speaker) {
    LengthStats s;
    std::size_t total = 0;
    for (const auto& snippet : snippets) {
        for (const auto& t : snippet.turns) {
            if (speaker && t.speaker != *speaker) continue;
            const int w = static_cast<int>(count_words(t.text));
            if (w == 0) continue;
            s.l_min = s.utterances == 0 ? w : std::min(s.l_min, w);
            s.l_max = std::max(s.l_max, w);
            total += static_cast<std::size_t>(w);
            ++s.utterances;
        }
    }
    if (s.utterances > 0) s.l_avg = static_cast<double>(total) / static_cast<double>(s.utterances);
    return s;
}

LengthParams boosted_params(const LengthStats& stats, const LengthBoost& boost) {
    if (stats.utterances == 0) throw ParameterError("no snippet utterances to derive lengths from");
    const int lo = std::max(1, static_cast<int>(std::lround(stats.l_min * boost.min)));
    const int avg = std::max(lo, static_cast<int>(std::lround(stats.l_avg * boost.avg)));
    const int hi = std::max(avg, static_cast<int>(std::lround(stats.l_max * boost.max)));
    return length_params(lo, avg, hi);
}

// +-----------------------------------+
// |          Virtual users            |
// +-----------------------------------+

json to_json(const VirtualUserProfile& p) {
    return {{"name", p.name},
            {"roles", p.roles},
            {"traits", p.traits},
            {"length",
             {{"l_min", p.length.l_min},
              {"l_avg", p.length.l_avg},
              {"l_max", p.length.l_max},
              {"mu", p.length.mu},
              {"sigma", p.length.sigma}}}};
}

json profiles_to_json(std::span<const VirtualUserProfile> profiles) {
    json users = json::array();
    for (const auto& p : profiles) users.push_back(to_json(p));
    return {{"users", users}};
}

std::optional<Behavior> behavior_for_role(std::string_view role) {
    if (role == "questioner" || role == "detail-asker") return Behavior::AskingQuestions;
    if (role == "direct-chatter") return Behavior::DirectChatting;
    if (role == "off-topic drifter") return Behavior::TopicTransition;
    return std::nullopt;
}

bool RoleCooldowns::blocked(const std::string& user, std::string_view role) const {
    const auto b = behavior_for_role(role);
    return b && remaining(user, *b) > 0;
}

int RoleCooldowns::remaining(const std::string& user, Behavior b) const {
    const auto it = counters_.find(user);
    return it == counters_.end() ? 0 : it->second[static_cast<std::size_t>(b)];
}

void RoleCooldowns::advance(const std::string& user, std::string_view role) {
    for (auto& [_, c] : counters_) {
        for (auto& v : c) v = std::max(0, v - 1);
    }
    if (const auto b = behavior_for_role(role)) counters_[user][static_cast<std::size_t>(*b)] = length_;
}

std::vector<VirtualUserProfile> model_user_behavior(std::span<const ChatSnippet> snippets,
                                                    const std::vector<std::string>& users,
                                                    const MusSettings& settings, LlmClient& client, Rng& rng,
                                                    Diagnostics& diag) {
    validate_snippets(snippets);
    if (users.size() < 2) throw ParameterError("simulation needs at least two virtual users");
    const auto subset = static_cast<std::size_t>(kSubsetSize);
    if (settings.roles.size() < subset || settings.traits.size() < subset) {
        throw ParameterError("role and trait catalogues need at least " + std::to_string(kSubsetSize) + " entries");
    }

    const auto speakers = snippet_speakers(snippets);
    const auto text = format_snippets(snippets);
    std::vector<VirtualUserProfile> out;
    for (std::size_t u = 0; u < users.size(); ++u) {
        VirtualUserProfile p;
        p.name = users[u];

        std::vector<std::string> roles;
        std::vector<std::string> traits;
        for (int attempt = 0; attempt < 2; ++attempt) {
            try {
                const auto resp = client.complete(prompts::user_modeling(),
                                                  {{"snippets", text},
                                                   {"user", p.name},
                                                   {"roles", join(settings.roles)},
                                                   {"traits", join(settings.traits)},
                                                   {"count", std::to_string(kSubsetSize)}});
                roles.clear();
                traits.clear();
                std::istringstream lines(extract_answer(resp.text));
                std::string line;
                while (std::getline(lines, line)) {
                    const auto colon = line.find(':');
                    if (colon == std::string::npos) continue;
                    const auto key = to_lower(trim(std::string_view(line).substr(0, colon)));
                    if (key == "roles") roles = split_list(std::string_view(line).substr(colon + 1));
                    if (key == "traits") traits = split_list(std::string_view(line).substr(colon + 1));
                }
            } catch (const ProviderUnavailable& e) {
                diag.warn("user modeling for " + p.name + " unavailable: " + e.what());
            }
            if (valid_subset(roles, settings.roles, subset) && valid_subset(traits, settings.traits, subset)) break;
            diag.warn("user modeling for " + p.name + " returned names outside the catalogues" +
                      (attempt == 0 ? "; asking again" : "; filling at random"));
        }
        p.roles = valid_subset(roles, settings.roles, subset) ? roles : repair_subset(roles, settings.roles, subset, rng);
        p.traits =
            valid_subset(traits, settings.traits, subset) ? traits : repair_subset(traits, settings.traits, subset, rng);

        // Virtual users take the lengths of the snippet speaker with the same
        // name, otherwise of the snippet speakers in order of appearance.
        std::string source = speakers[u % speakers.size()];
        if (in_catalogue(speakers, p.name)) source = p.name;
        auto stats = snippet_length_stats(snippets, source);
        if (stats.utterances == 0) stats = snippet_length_stats(snippets);
        p.length = boosted_params(stats, settings.boost);
        out.push_back(std::move(p));
    }
    return out;
}

SpeakerChoice select_next_speaker(const TurnContext& ctx, std::span<const VirtualUserProfile> profiles,
                                  const RoleCooldowns& cooldowns, LlmClient& client, Rng& rng, Diagnostics& diag) {
    if (profiles.size() < 2) throw ParameterError("speaker selection needs at least two virtual users");
    const auto& config = *ctx.config;

    std::vector<std::string> names;
    for (const auto& p : profiles) names.push_back(p.name);
    const std::string last = ctx.last_speaker.value_or("");

    SpeakerChoice choice;
    try {
        const auto resp = client.complete(prompts::next_speaker(), {{"topic", config.inputs.topic},
                                                                    {"users", join(names)},
                                                                    {"window", format_window(ctx.window)},
                                                                    {"last_speaker", last.empty() ? "nobody" : last},
                                                                    {"bot_name", config.bot_name}});
        choice.user = match_name(extract_answer(resp.text), names);
    } catch (const ProviderUnavailable& e) {
        diag.warn(std::string("next-speaker proposal unavailable: ") + e.what());
    }

    const VirtualUserProfile* profile = nullptr;
    if (!choice.user.empty() && choice.user != last && choice.user != config.bot_name) {
        profile = &*std::find_if(profiles.begin(), profiles.end(), [&](const auto& p) { return p.name == choice.user; });
    }

    if (profile == nullptr) {
        std::vector<const VirtualUserProfile*> valid;
        for (const auto& p : profiles) {
            if (p.name != last && p.name != config.bot_name) valid.push_back(&p);
        }
        profile = pick(std::span<const VirtualUserProfile* const>(valid), rng);
        diag.warn("next-speaker proposal '" + choice.user + "' rejected; picked " + profile->name + " at random");
        choice.user = profile->name;
        choice.fallback = true;
    }

    std::vector<std::string> allowed;
    for (const auto& r : profile->roles) {
        if (!cooldowns.blocked(profile->name, r)) allowed.push_back(r);
    }
    if (allowed.empty()) allowed = profile->roles;

    if (choice.fallback) {
        choice.role = pick(std::span<const std::string>(allowed), rng);
        return choice;
    }
    try {
        const auto resp = client.complete(prompts::speaking_role(), {{"user", profile->name},
                                                                     {"roles", join(profile->roles)},
                                                                     {"window", format_window(ctx.window)}});
        choice.role = match_name(extract_answer(resp.text), profile->roles);
    } catch (const ProviderUnavailable& e) {
        diag.warn(std::string("speaking-role proposal unavailable: ") + e.what());
    }
    if (!in_catalogue(allowed, choice.role)) {
        if (!choice.role.empty()) diag.warn("role '" + choice.role + "' is cooling down for " + profile->name);
        choice.role = pick(std::span<const std::string>(allowed), rng);
    }
    return choice;
}

int word_budget(std::string_view role, int length, const MusSettings& settings) {
    if (role == "questioner") return std::max(length, settings.questioner_min_words);
    return length;
}

std::optional<std::string> generate_utterance(const TurnContext& ctx, const VirtualUserProfile& profile,
                                              const std::string& role, int length, LlmClient& client, Rng& rng,
                                              Diagnostics& diag) {
    const auto& config = *ctx.config;
    const auto window_text = format_window(ctx.window);
    const auto length_text = std::to_string(length);

    std::string trait;
    try {
        const auto resp = client.complete(prompts::utterance_trait(), {{"topic", config.inputs.topic},
                                                                       {"user", profile.name},
                                                                       {"role", role},
                                                                       {"length", length_text},
                                                                       {"traits", join(profile.traits)},
                                                                       {"summary", ctx.summary},
                                                                       {"window", window_text}});
        trait = match_name(extract_answer(resp.text), profile.traits);
    } catch (const ProviderUnavailable& e) {
        diag.warn(std::string("utterance-trait proposal unavailable: ") + e.what());
    }
    if (trait.empty()) trait = pick(std::span<const std::string>(profile.traits), rng);

    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            const auto resp = client.complete(prompts::utterance(), {{"topic", config.inputs.topic},
                                                                     {"user", profile.name},
                                                                     {"role", role},
                                                                     {"trait", trait},
                                                                     {"summary", ctx.summary},
                                                                     {"window", window_text},
                                                                     {"length", length_text}});
            auto text = extract_answer(resp.text);
            // Models sometimes prefix the message with the speaker's name.
            if (const auto prefix = profile.name + ":"; text.starts_with(prefix)) text = trim(text.substr(prefix.size()));
            if (!text.empty()) return text;
        } catch (const ProviderUnavailable& e) {
            diag.warn(std::string("utterance generation unavailable: ") + e.what());
        }
    }
    diag.warn("empty utterance for " + profile.name + "; turn skipped");
    return std::nullopt;
}

// +-----------------------------------+
// |            Simulation             |
// +-----------------------------------+

SimulationResult run_simulation(SessionEngine& engine, std::span<const VirtualUserProfile> profiles,
                                const MusSettings& settings, int turns, Rng& rng, LlmClient& client) {
    if (turns < 1) throw ParameterError("simulation needs at least one turn");
    const auto& config = engine.config();

    std::vector<std::string> roster;
    for (const auto& p : profiles) roster.push_back(p.name);
    engine.set_roster(roster);

    SimulationResult result;
    RoleCooldowns cooldowns(settings.behavior_cooldown);
    std::optional<std::string> last_speaker;
    for (int turn = 0; turn < turns; ++turn) {
        Diagnostics diag;
        Transcript context;
        for (const auto& u : engine.transcript()) {
            if (u.kind != UtteranceKind::System) context.push_back(u);
        }
        TurnContext ctx{&config, window(context, static_cast<std::size_t>(settings.context_turns)),
                        format_summary(engine.summary(), engine.subtopics()), last_speaker};

        const auto choice = select_next_speaker(ctx, profiles, cooldowns, client, rng, diag);
        const auto& profile = *std::find_if(profiles.begin(), profiles.end(),
                                            [&](const auto& p) { return p.name == choice.user; });
        const int length = word_budget(choice.role, sample_length(profile.length, rng, settings.truncation), settings);
        auto text = generate_utterance(ctx, profile, choice.role, length, client, rng, diag);
        cooldowns.advance(choice.user, choice.role);
        for (auto& w : diag.warnings) result.warnings.push_back(std::move(w));
        if (!text) {
            ++result.skipped_turns;
            continue;
        }
        if (choice.role == "direct-chatter" && !detect_direct_ping(*text, config.bot_keyword)) {
            text = config.bot_keyword + " " + *text;
        }

        const auto in = engine.ingest_human(choice.user, *text);
        ++result.human_turns;
        last_speaker = choice.user;
        if (in.ping || in.cycle_due) {
            const auto rec = engine.run_cycle(in.utterance.id, in.ping);
            if (!rec.decision.response.empty()) {
                engine.append(config.bot_name, UtteranceKind::Bot, rec.decision.response);
            }
            for (const auto& w : rec.warnings) result.warnings.push_back(w);
        }
    }
    return result;
}

}  // namespace muca::mus
