#include "rfsearch/feedback.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "rfsearch/errors.hpp"

namespace rfsearch {

namespace {

void fill_stats(SeriesSummary& s, std::span<const double> data) {
    if (data.empty()) {
        s.max = s.mean = s.min = 0.0;
        return;
    }
    const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
    s.min = *lo;
    s.max = *hi;
    s.mean = std::accumulate(data.begin(), data.end(), 0.0) / static_cast<double>(data.size());
    // Summation rounding can push the mean a hair outside [min, max].
    s.mean = std::clamp(s.mean, s.min, s.max);
}

}  // namespace

SeriesSummary SeriesSummary::from_values(std::vector<double> values) {
    SeriesSummary s;
    s.values = std::move(values);
    fill_stats(s, s.values);
    return s;
}

SeriesSummary SeriesSummary::with_run_stats(std::vector<double> values, std::span<const double> full_run) {
    SeriesSummary s;
    s.values = std::move(values);
    fill_stats(s, full_run);
    return s;
}

void validate(const TrainingFeedback& feedback) {
    auto check = [](const std::string& name, const SeriesSummary& s) {
        if (s.values.size() != kSnapshotCount)
            throw Error(fmt::format("series '{}' has {} snapshots, expected {}", name, s.values.size(),
                                    kSnapshotCount));
        if (!(s.max >= s.mean && s.mean >= s.min))
            throw Error(fmt::format("series '{}' violates max >= mean >= min", name));
    };
    for (const auto& [name, series] : feedback.components) check(name, series);
    check("task_score", feedback.task_score);
    check("episode_lengths", feedback.episode_lengths);
}

std::string format_2dp(double value) {
    std::string text = fmt::format("{:.2f}", value);
    if (text == "-0.00") text = "0.00";
    return text;
}

std::string format_series(const std::string& name, const SeriesSummary& series) {
    std::string out = name + ": [";
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        if (i > 0) out += ", ";
        out += "'" + format_2dp(series.values[i]) + "'";
    }
    out += "], Max: " + format_2dp(series.max);
    out += ", Mean: " + format_2dp(series.mean);
    out += ", Min: " + format_2dp(series.min);
    return out;
}

std::string format_feedback(const TrainingFeedback& feedback) {
    std::vector<std::string> lines;
    lines.reserve(feedback.components.size() + 2);
    for (const auto& [name, series] : feedback.components) lines.push_back(format_series(name, series));
    lines.push_back(format_series("task_score", feedback.task_score));
    lines.push_back(format_series("episode_lengths", feedback.episode_lengths));
    return fmt::format("{}", fmt::join(lines, "\n"));
}

}  // namespace rfsearch
