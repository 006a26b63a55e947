#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rfsearch {

/// Number of evenly spaced snapshots every tracked series carries.
inline constexpr std::size_t kSnapshotCount = 10;

/// One tracked quantity: its snapshot values plus the max/mean/min observed
/// over the whole training run. The run-wide statistics are kept separately
/// because they cover every step, not only the sampled snapshots.
struct SeriesSummary {
    std::vector<double> values;
    double max = 0.0;
    double mean = 0.0;
    double min = 0.0;

    /// Statistics taken over `values` themselves.
    static SeriesSummary from_values(std::vector<double> values);
    /// Snapshots from `values`, statistics from `full_run`.
    static SeriesSummary with_run_stats(std::vector<double> values, std::span<const double> full_run);

    bool operator==(const SeriesSummary&) const = default;
};

struct TrainingFeedback {
    std::vector<std::pair<std::string, SeriesSummary>> components;
    SeriesSummary task_score;
    SeriesSummary episode_lengths;
    int epoch_freq = 1;
    /// Best task score over all policy checkpoints.
    double final_score = 0.0;

    bool operator==(const TrainingFeedback&) const = default;
};

/// Checks snapshot counts and max >= mean >= min; throws rfsearch::Error.
void validate(const TrainingFeedback& feedback);

/// Renders one series line: `name: ['v1', ..., 'v10'], Max: M, Mean: m, Min: n`.
std::string format_series(const std::string& name, const SeriesSummary& series);

/// Components in insertion order, then task_score, then episode_lengths,
/// one line each, every number with two decimals.
std::string format_feedback(const TrainingFeedback& feedback);

/// Two-decimal rendering used throughout the feedback text ("-0.00" is
/// printed as "0.00").
std::string format_2dp(double value);

}  // namespace rfsearch
