#pragma once

#include "muca/core.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Conversation metrics over persisted transcripts. Only human utterances
// count; bot and system messages are ignored everywhere.
namespace muca::metrics {

class MetricsError : public Error {
public:
    using Error::Error;
};

/// Mean over transcripts of the total human word count.
double words_per_conversation(std::span<const Transcript> transcripts);

/// Total human words over the number of human utterances.
double words_per_utterance(std::span<const Transcript> transcripts);

/// Human word totals per sender. Names in `roster` that never spoke get 0.
std::map<std::string, double> participant_word_totals(const Transcript& transcript,
                                                       std::span<const std::string> roster = {});

/// 100 * sample standard deviation / mean.
double evenness_std_pct(std::span<const double> word_totals);
double evenness_std_pct(const Transcript& transcript, std::span<const std::string> roster = {});

/// 100 * agreements / tasks, rounded to one decimal.
double consensus_rate(int agreements, int tasks);

struct Annotation {
    int agreements = 0;
    int tasks = 0;
};

/// `{"<file>": {"agreements": a, "tasks": t}, ...}`; keys are matched
/// against a log's full path first, then its file name.
std::map<std::string, Annotation> annotations_from_json(const nlohmann::json& j);
std::map<std::string, Annotation> load_annotations(const std::filesystem::path& path);

struct TranscriptMetrics {
    std::string name;
    double words = 0.0;
    std::size_t utterances = 0;
    std::optional<double> evenness;
    std::optional<Annotation> annotation;
};

struct Report {
    std::vector<TranscriptMetrics> transcripts;
    double words_per_conversation = 0.0;
    double words_per_utterance = 0.0;
    std::optional<double> evenness_std_pct;  // mean over transcripts with >= 2 speakers
    std::optional<double> consensus_pct;     // pooled over annotated transcripts
};

struct NamedTranscript {
    std::string name;
    Transcript transcript;
};

Report build_report(std::span<const NamedTranscript> transcripts,
                    const std::map<std::string, Annotation>& annotations = {});

nlohmann::json to_json(const Report& r);
/// Plain-text table: engagement, evenness and consensus rows.
std::string format_table(const Report& r);

/// Sorted paths matching a shell glob pattern.
std::vector<std::filesystem::path> expand_glob(const std::string& pattern);

}  // namespace muca::metrics
