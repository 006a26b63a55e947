#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "rfsearch/feedback.hpp"

namespace testutil {

/// Numeric content of a published Ant training log. Max/Mean/Min are
/// run-wide statistics and are not derivable from the ten snapshots.
inline rfsearch::TrainingFeedback ant_feedback() {
    auto series = [](std::vector<double> v, double max, double mean, double min) {
        rfsearch::SeriesSummary s;
        s.values = std::move(v);
        s.max = max;
        s.mean = mean;
        s.min = min;
        return s;
    };
    rfsearch::TrainingFeedback f;
    f.components.emplace_back(
        "reward_forward_velocity",
        series({-0.02, 1.07, 1.47, 1.90, 2.29, 2.62, 3.00, 3.48, 3.54, 3.67}, 3.73, 2.48, -0.02));
    f.components.emplace_back("reward_to_target", series(std::vector<double>(10, 0.0), 0.0, 0.0, 0.0));
    f.task_score = series({-0.02, 1.08, 1.48, 1.90, 2.29, 2.60, 2.97, 3.45, 3.49, 3.62}, 3.67, 2.46, -0.02);
    f.episode_lengths = series({59.19, 180.39, 285.69, 425.37, 519.28, 578.28, 634.42, 644.16, 633.70, 649.94},
                               717.00, 494.84, 59.19);
    f.final_score = 3.67;
    return f;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string chomp(std::string s) {
    while (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
}

}  // namespace testutil
