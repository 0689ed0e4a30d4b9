#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the library's own formula code.

#include "muca/core.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oracle {

// ---- chime-in -------------------------------------------------------------

/// Hand-expanded chime probability for the default parameters or any
/// (alpha, beta): silence 1 - alpha/(n+alpha), semantic by truth table.
double p_silence(int n_silent, double alpha = 0.2);
double p_semantic(int stuck, int unsolve, double beta = 0.4);
double p_chime(int n_silent, int stuck, int unsolve, double alpha = 0.2, double beta = 0.4);

// ---- lurkers --------------------------------------------------------------

struct LurkerRow {
    std::string name;
    long long freq_lt = 0;
    long long len_lt = 0;
    long long freq_st = 0;
    long long len_st = 0;
};

struct LurkerThresholds {
    double freq_lt = 0.4;
    double len_lt = 0.4;
    double freq_st = 1.0;
    double len_st = 5.0;
};

/// Ratio test on both long-window features, below-mean guard, short-window
/// silence. Means and sample variances are recomputed here in long double.
std::vector<std::string> lurkers(const std::vector<LurkerRow>& rows, const LurkerThresholds& t = {});

// ---- arbitration ----------------------------------------------------------

/// Strategy slot (0..6) with the smallest rank among set bits of `mask`
/// (bit i = slot i eligible), slot 6 (keep silent) when empty, slot 0 when
/// bit 0 is set.
int choose(unsigned mask, const std::vector<int>& ranks = {1, 2, 3, 4, 5, 6, 7});

// ---- transcripts ----------------------------------------------------------

struct Features {
    int freq_st = 0;
    int freq_lt = 0;
    int len_st = 0;
    int len_lt = 0;
};

/// Recount over the last n_sw / n_lw entries of the transcript, counting
/// human utterances only.
std::map<std::string, Features> recount(const muca::Transcript& t, int n_sw, int n_lw);

/// Sample mean and (n-1) variance by the textbook two-pass formula.
std::pair<double, double> mean_var(const std::vector<double>& xs);

/// 100 * sample std / mean.
double evenness(const std::vector<double>& totals);

// ---- lengths --------------------------------------------------------------

/// Probability mass of the rounded, truncated log-normal on [lo, hi],
/// obtained by Simpson integration of the density over each unit cell.
std::vector<double> truncated_pmf(double mu, double sigma, int lo, int hi);
double pmf_mean(const std::vector<double>& pmf, int lo);

/// Two-sided one-sample KS: statistic of integer samples against a pmf on
/// [lo, hi], and the asymptotic Kolmogorov p-value.
double ks_statistic(const std::vector<int>& samples, const std::vector<double>& pmf, int lo);
double kolmogorov_p(double d, std::size_t n);

// ---- helpers --------------------------------------------------------------

muca::Utterance human(std::int64_t id, std::string sender, std::string text);
muca::Utterance bot(std::int64_t id, std::string text, std::string name = "MUCA");

/// A text with exactly `words` words.
std::string words(int n, const std::string& w = "word");

}  // namespace oracle
