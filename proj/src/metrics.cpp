#include "muca/metrics.hpp"

#include <glob.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace muca::metrics {

using json = nlohmann::json;

namespace {

std::pair<double, std::size_t> human_words(const Transcript& t) {
    double words = 0.0;
    std::size_t n = 0;
    for (const auto& u : t) {
        if (u.kind != UtteranceKind::Human) continue;
        words += static_cast<double>(u.word_count);
        ++n;
    }
    return {words, n};
}

std::string fixed1(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << v;
    return os.str();
}

}  // namespace

double words_per_conversation(std::span<const Transcript> transcripts) {
    if (transcripts.empty()) throw MetricsError("words per conversation needs at least one transcript");
    double total = 0.0;
    for (const auto& t : transcripts) total += human_words(t).first;
    return total / static_cast<double>(transcripts.size());
}

double words_per_utterance(std::span<const Transcript> transcripts) {
    double words = 0.0;
    std::size_t n = 0;
    for (const auto& t : transcripts) {
        const auto [w, k] = human_words(t);
        words += w;
        n += k;
    }
    if (n == 0) throw MetricsError("words per utterance needs at least one human utterance");
    return words / static_cast<double>(n);
}

std::map<std::string, double> participant_word_totals(const Transcript& transcript,
                                                       std::span<const std::string> roster) {
    std::map<std::string, double> totals;
    for (const auto& name : roster) totals[name] = 0.0;
    for (const auto& u : transcript) {
        if (u.kind == UtteranceKind::Human) totals[u.sender] += static_cast<double>(u.word_count);
    }
    return totals;
}

double evenness_std_pct(std::span<const double> word_totals) {
    if (word_totals.size() < 2) throw MetricsError("evenness needs at least two participants");
    const double n = static_cast<double>(word_totals.size());
    const double mean = std::accumulate(word_totals.begin(), word_totals.end(), 0.0) / n;
    if (!(mean > 0.0)) throw MetricsError("evenness needs a positive mean word count");
    double ss = 0.0;
    for (double w : word_totals) ss += (w - mean) * (w - mean);
    return 100.0 * std::sqrt(ss / (n - 1.0)) / mean;
}

double evenness_std_pct(const Transcript& transcript, std::span<const std::string> roster) {
    std::vector<double> totals;
    for (const auto& [_, w] : participant_word_totals(transcript, roster)) totals.push_back(w);
    return evenness_std_pct(totals);
}

double consensus_rate(int agreements, int tasks) {
    if (tasks < 1) throw MetricsError("consensus rate needs at least one task");
    if (agreements < 0 || agreements > tasks) throw MetricsError("agreements must lie in [0, tasks]");
    return std::round(1000.0 * agreements / tasks) / 10.0;
}

std::map<std::string, Annotation> annotations_from_json(const json& j) {
    if (!j.is_object()) throw MetricsError("annotations must be a JSON object keyed by log file");
    std::map<std::string, Annotation> out;
    for (const auto& [file, a] : j.items()) {
        try {
            out[file] = Annotation{a.at("agreements").get<int>(), a.at("tasks").get<int>()};
        } catch (const json::exception& e) {
            throw MetricsError("annotation for '" + file + "': " + e.what());
        }
        consensus_rate(out[file].agreements, out[file].tasks);  // validates
    }
    return out;
}

std::map<std::string, Annotation> load_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MetricsError("cannot read annotations file '" + path.string() + "'");
    try {
        return annotations_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw MetricsError("annotations file '" + path.string() + "': " + e.what());
    }
}

Report build_report(std::span<const NamedTranscript> transcripts, const std::map<std::string, Annotation>& annotations) {
    if (transcripts.empty()) throw MetricsError("no transcripts to analyze");
    Report r;
    std::vector<Transcript> all;
    double evenness_sum = 0.0;
    int evenness_n = 0;
    int agreements = 0;
    int tasks = 0;
    for (const auto& nt : transcripts) {
        TranscriptMetrics m;
        m.name = nt.name;
        std::tie(m.words, m.utterances) = human_words(nt.transcript);
        if (participant_word_totals(nt.transcript).size() >= 2 && m.words > 0) {
            m.evenness = evenness_std_pct(nt.transcript);
            evenness_sum += *m.evenness;
            ++evenness_n;
        }
        auto it = annotations.find(nt.name);
        if (it == annotations.end()) it = annotations.find(std::filesystem::path(nt.name).filename().string());
        if (it != annotations.end()) {
            m.annotation = it->second;
            agreements += it->second.agreements;
            tasks += it->second.tasks;
        }
        all.push_back(nt.transcript);
        r.transcripts.push_back(std::move(m));
    }
    r.words_per_conversation = words_per_conversation(all);
    r.words_per_utterance = words_per_utterance(all);
    if (evenness_n > 0) r.evenness_std_pct = evenness_sum / evenness_n;
    if (tasks > 0) r.consensus_pct = consensus_rate(agreements, tasks);
    return r;
}

json to_json(const Report& r) {
    const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json rows = json::array();
    for (const auto& m : r.transcripts) {
        json row = {{"name", m.name}, {"words", m.words}, {"utterances", m.utterances}, {"evenness_std_pct", opt(m.evenness)}};
        if (m.annotation) {
            row["agreements"] = m.annotation->agreements;
            row["tasks"] = m.annotation->tasks;
        }
        rows.push_back(row);
    }
    return {{"transcripts", rows},
            {"words_per_conversation", r.words_per_conversation},
            {"words_per_utterance", r.words_per_utterance},
            {"evenness_std_pct", opt(r.evenness_std_pct)},
            {"consensus_pct", opt(r.consensus_pct)}};
}

std::string format_table(const Report& r) {
    std::ostringstream os;
    const auto row = [&](const std::string& name, const std::string& value) {
        os << std::left << std::setw(28) << name << value << '\n';
    };
    row("Metric", "Value");
    row("Engt.-Words/Conv.", fixed1(r.words_per_conversation));
    row("Engt.-Words/Utt.", fixed1(r.words_per_utterance));
    row("Evenness-STD (%)", r.evenness_std_pct ? fixed1(*r.evenness_std_pct) : "n/a");
    row("Consensus (%)", r.consensus_pct ? fixed1(*r.consensus_pct) : "n/a");
    row("Transcripts", std::to_string(r.transcripts.size()));
    return os.str();
}

std::vector<std::filesystem::path> expand_glob(const std::string& pattern) {
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    std::vector<std::filesystem::path> out;
    if (rc == 0) {
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    if (rc != 0 && rc != GLOB_NOMATCH) throw MetricsError("cannot expand '" + pattern + "'");
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace muca::metrics
