#include "muca/synthetic.hpp"

#include "muca/prompts.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <regex>
#include <sstream>

namespace muca {

namespace {

namespace names = prompts::names;

// Remainder of the first line starting with `prefix`.
std::string field(const std::string& prompt, std::string_view prefix) {
    std::istringstream in(prompt);
    std::string line;
    while (std::getline(in, line)) {
        if (line.starts_with(prefix)) return trim(std::string_view(line).substr(prefix.size()));
    }
    return {};
}

// "N. title" lines directly below `header`.
std::vector<std::string> numbered_after(const std::string& prompt, std::string_view header) {
    static const std::regex item(R"(^\s*\d+\.\s+(.+)$)");
    std::vector<std::string> out;
    std::istringstream in(prompt);
    std::string line;
    bool inside = false;
    while (std::getline(in, line)) {
        if (!inside) {
            inside = line.starts_with(header);
            continue;
        }
        std::smatch m;
        if (!std::regex_match(line, m, item)) break;
        out.push_back(trim(m[1].str()));
    }
    return out;
}

std::vector<std::string> comma_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (auto t = trim(item); !t.empty()) out.push_back(t);
    }
    return out;
}

int first_int(const std::string& prompt, const std::regex& re, int fallback) {
    std::smatch m;
    return std::regex_search(prompt, m, re) ? std::stoi(m[1].str()) : fallback;
}

const std::vector<std::string> kTitles = {"Goals and success criteria", "Options and trade-offs",
                                          "Roles and responsibilities", "Timeline and milestones",
                                          "Risks and open issues",      "Final decision and next steps"};

const std::vector<std::string> kWords = {
    "maybe",  "we",     "could", "try",    "the",    "second", "option", "since",  "it",    "keeps",
    "costs",  "low",    "and",   "gives",  "us",     "more",   "time",   "to",     "plan",  "details",
    "I",      "think",  "that",  "works",  "for",    "me",     "but",    "what",   "about", "risks",
    "people", "seemed", "happy", "with",   "this",   "so",     "far",    "honest", "view",  "here"};

// Sub-topic k becomes "being discussed" at status call start(k) and "well
// discussed" at done(k). The long gap on the second sub-topic stalls the
// well-discussed count.
int start_call(std::size_t k) { return k == 0 ? 1 : (k == 1 ? 6 : 24 + 10 * static_cast<int>(k - 2)); }
int done_call(std::size_t k) { return k == 0 ? 6 : (k == 1 ? 24 : 34 + 10 * static_cast<int>(k - 2)); }

class SyntheticState {
public:
    std::optional<std::string> answer(const ProviderRequest& r) {
        std::lock_guard lock(mu_);
        const int c = ++calls_[r.template_name];
        const auto& t = r.template_name;
        const auto& p = r.prompt;

        if (t == names::kSubtopicGeneration) {
            static const std::regex count_re(R"(exactly (\d+) concrete)");
            const auto n = static_cast<std::size_t>(std::clamp(first_int(p, count_re, 3), 1, 6));
            std::string out = "ANSWER:\n";
            for (std::size_t i = 0; i < n; ++i) out += std::to_string(i + 1) + ". " + kTitles[i] + "\n";
            return out;
        }
        if (t == names::kTopicSummary) {
            const auto titles = numbered_after(p, "Sub-topics:");
            std::string out = "ANSWER:\n";
            for (std::size_t i = 0; i < titles.size(); ++i) {
                out += std::to_string(i + 1) + ": opinions on " + to_lower(titles[i]) + " collected\n";
            }
            return out;
        }
        if (t == names::kSubtopicStatus) {
            status_call_ = c;
            const auto titles = numbered_after(p, "Sub-topics:");
            std::string out = "Each participant gave an opinion.\nANSWER:\n";
            for (std::size_t i = 0; i < titles.size(); ++i) {
                const char* label = c >= done_call(i)    ? "well discussed"
                                    : c >= start_call(i) ? "being discussed"
                                                         : "not discussed";
                out += std::to_string(i + 1) + ": " + label + "\n";
            }
            return out;
        }
        if (t == names::kDiscussedSubtopics) {
            const auto titles = numbered_after(p, "Sub-topics:");
            // Every fifth cycle drifts into chit-chat.
            if (titles.empty() || c % 5 == 0) return "ANSWER: none";
            std::size_t current = 0;
            for (std::size_t i = 0; i < titles.size(); ++i) {
                if (status_call_ >= start_call(i)) current = i;
            }
            return "ANSWER:\n" + titles[current];
        }
        if (t == names::kAccumulativeSummary) {
            return "ANSWER: " + field(p, "Participant: ") + " shared a view on " + to_lower(field(p, "Sub-topic: ")) +
                   " (" + std::to_string(c) + ")";
        }
        if (t == names::kStuckUnsolved) {
            if (c % 4 == 0) return "The same points keep coming back.\nANSWER: stuck=1 unsolve=0";
            if (c % 6 == 0) return "ANSWER: stuck=0 unsolve=1";
            return "ANSWER: stuck=0 unsolve=0";
        }
        if (t == names::kDirectChatting) {
            return "ANSWER: Happy to help. So far the group has covered the first sub-topics; "
                   "anything beyond the provided information is out of scope for me.";
        }
        if (t == names::kInitiativeSummarization) {
            return "ANSWER: Quick recap: the group agreed on the first points and is still weighing the options.";
        }
        if (t == names::kParticipationEncouragement) {
            return "ANSWER: " + field(p, "Participant to encourage: ") +
                   ", we have not heard from you in a while. What do you think?";
        }
        if (t == names::kSubtopicTransition) {
            return "ANSWER: It sounds like " + to_lower(field(p, "Current sub-topic: ")) +
                   " is settling; shall we move on to the next point?";
        }
        if (t == names::kConflictResolution) {
            return "ANSWER: There are two views here. A middle ground could combine both; "
                   "otherwise we could park it and look at the next sub-topic.";
        }
        if (t == names::kInContextChimeIn) {
            return "ANSWER: One thing that might help: list the open options side by side before deciding.";
        }
        if (t == names::kUserModeling) {
            const auto roles = comma_list(field(p, "Speaking roles: "));
            const auto traits = comma_list(field(p, "Utterance traits: "));
            const auto count = static_cast<std::size_t>(first_int(p, std::regex(R"(exactly (\d+) speaking)"), 6));
            const std::size_t shift = static_cast<std::size_t>(c - 1) * 3;
            std::string out = "ANSWER:\nroles: ";
            for (std::size_t i = 0; i < count && !roles.empty(); ++i) {
                out += (i ? ", " : "") + roles[(shift + i) % roles.size()];
            }
            out += "\ntraits: ";
            for (std::size_t i = 0; i < count && !traits.empty(); ++i) {
                out += (i ? ", " : "") + traits[(shift + i) % traits.size()];
            }
            return out;
        }
        if (t == names::kNextSpeaker) {
            const auto users = comma_list(field(p, "Participants: "));
            if (users.empty()) return "ANSWER:";
            static const std::regex last_re(R"(not (.+) \(the last speaker\))");
            std::smatch m;
            const std::string last = std::regex_search(p, m, last_re) ? m[1].str() : "";
            // The last listed user rarely speaks.
            if (users.size() > 2 && c % 40 == 0 && users.back() != last) return "ANSWER: " + users.back();
            const std::size_t active = users.size() > 2 ? users.size() - 1 : users.size();
            std::size_t i = static_cast<std::size_t>(c) % active;
            if (users[i] == last) i = (i + 1) % active;
            return "ANSWER: " + users[i];
        }
        if (t == names::kSpeakingRole) {
            const auto roles = comma_list(field(p, "Their speaking roles: "));
            if (roles.empty()) return "ANSWER:";
            if (c % 11 == 0) {
                if (auto it = std::find(roles.begin(), roles.end(), "direct-chatter"); it != roles.end()) {
                    return "ANSWER: " + *it;
                }
            }
            return "ANSWER: " + roles[static_cast<std::size_t>(c) % roles.size()];
        }
        if (t == names::kUtteranceTrait) {
            const auto traits = comma_list(field(p, "Speaking personalities available: "));
            return "ANSWER: " + (traits.empty() ? std::string() : traits[static_cast<std::size_t>(c) % traits.size()]);
        }
        if (t == names::kUtterance) {
            static const std::regex len_re(R"(about (\d+) words)");
            const int n = std::max(1, first_int(p, len_re, 8));
            std::string text;
            for (int i = 0; i < n; ++i) {
                if (i) text += ' ';
                text += kWords[static_cast<std::size_t>(c * 7 + i) % kWords.size()];
            }
            if (p.find("Speaking role: questioner") != std::string::npos) text += "?";
            return "ANSWER: " + text;
        }
        return std::nullopt;
    }

private:
    std::mutex mu_;
    std::map<std::string, int> calls_;
    int status_call_ = 0;
};

}  // namespace

std::unique_ptr<ScriptedProvider> make_synthetic_provider() {
    auto provider = std::make_unique<ScriptedProvider>(false);
    auto state = std::make_shared<SyntheticState>();
    provider->set_rule([state](const ProviderRequest& r) { return state->answer(r); });
    return provider;
}

}  // namespace muca
