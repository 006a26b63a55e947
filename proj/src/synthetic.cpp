#include <charconv>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "rfsearch/errors.hpp"
#include "rfsearch/evaluation.hpp"

namespace rfsearch {

double gaussian_bump(double x, double center, double width) {
    const double z = (x - center) / width;
    return std::exp(-0.5 * z * z);
}

double landscape_bump(double x, const LandscapeConfig& c) {
    return c.wide_height * gaussian_bump(x, c.wide_center, c.wide_width) +
           c.narrow_height * gaussian_bump(x, c.narrow_center, c.narrow_width);
}

TrainingFeedback synthetic_score(std::span<const double> genome, const LandscapeConfig& config) {
    if (genome.size() != config.dimension)
        throw DimensionMismatch(
            fmt::format("genome has {} entries, landscape expects {}", genome.size(), config.dimension));

    TrainingFeedback fb;
    fb.epoch_freq = 1;
    std::vector<double> total_curve(kSnapshotCount, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < genome.size(); ++i) {
        const double b = landscape_bump(genome[i], config);
        std::vector<double> curve(kSnapshotCount);
        for (std::size_t j = 0; j < kSnapshotCount; ++j) {
            const double progress = static_cast<double>(j) / static_cast<double>(kSnapshotCount - 1);
            curve[j] = b * (0.1 + 0.9 * progress);
            total_curve[j] += curve[j];
        }
        // The last snapshot is exactly b; keep it free of rounding.
        curve.back() = b;
        total += b;
        fb.components.emplace_back(fmt::format("coord_{}", i), SeriesSummary::from_values(std::move(curve)));
    }
    total_curve.back() = total;
    fb.task_score = SeriesSummary::from_values(std::move(total_curve));
    fb.episode_lengths = SeriesSummary::from_values(std::vector<double>(kSnapshotCount, 500.0));
    fb.final_score = total;
    return fb;
}

std::vector<double> parse_genome(std::string_view text) {
    std::vector<double> out;
    std::size_t i = 0;
    bool first_token = true;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '#') {
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '[' || c == ']') {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) && text[j] != ',' &&
               text[j] != ']' && text[j] != '#')
            ++j;
        const std::string_view token = text.substr(i, j - i);
        if (first_token && (token == "genome" || token == "genome:")) {
            first_token = false;
            i = j;
            continue;
        }
        first_token = false;
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value))
            throw ParseError(fmt::format("invalid genome entry '{}'", token));
        out.push_back(value);
        i = j;
    }
    if (out.empty()) throw ParseError("genome has no entries");
    return out;
}

std::string format_genome(std::span<const double> genome) {
    std::string out = "genome";
    for (double v : genome) out += fmt::format(" {:.6f}", v);
    return out;
}

SyntheticEvaluator::SyntheticEvaluator(LandscapeConfig config) : config_(config) {}

EvalOutcome SyntheticEvaluator::evaluate(const CandidateProgram& candidate, const EvalRequest&) {
    try {
        const auto genome = parse_genome(candidate.source_text);
        return EvalOutcome::success(synthetic_score(genome, config_));
    } catch (const Error& e) {
        return EvalOutcome::failure(fmt::format("Traceback (most recent call last):\n  genome evaluation\n{}",
                                                e.what()));
    }
}

EvalOutcome EvalOutcome::success(TrainingFeedback fb) {
    EvalOutcome out;
    out.status = Status::ok;
    out.feedback = std::move(fb);
    return out;
}

EvalOutcome EvalOutcome::failure(std::string traceback) {
    EvalOutcome out;
    out.status = Status::exec_error;
    out.traceback = std::move(traceback);
    return out;
}

}  // namespace rfsearch
