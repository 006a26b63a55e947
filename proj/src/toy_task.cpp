#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "rfsearch/errors.hpp"
#include "rfsearch/evaluation.hpp"
#include "rfsearch/rng.hpp"

namespace rfsearch {

namespace {

constexpr std::size_t kPolicyDims = 3;
using Policy = std::array<double, kPolicyDims>;

enum Slot : std::size_t { kDist, kVelX, kPrevDist, kTargetX, kActionMag, kSlotCount };

struct EpisodeResult {
    double episode_return = 0.0;
    double final_dist = 0.0;
    int length = 0;
    bool out_of_bounds = false;
    std::vector<double> component_means;
};

double act(const Policy& p, double x, double v, double target) {
    return std::clamp(p[0] * (target - x) + p[1] * v + p[2], -1.0, 1.0);
}

/// One rollout. `reward` may be null for pure task evaluation.
EpisodeResult run_episode(const Policy& policy, double target, const ToyTaskConfig& cfg,
                          const dsl::CompiledReward* reward) {
    EpisodeResult out;
    const std::size_t n_components = reward ? reward->component_count() : 0;
    out.component_means.assign(n_components, 0.0);
    std::vector<double> component_values(n_components, 0.0);
    std::array<double, kSlotCount> slots{};

    double x = 0.0;
    double v = 0.0;
    double prev_dist = std::abs(target);
    double dist = prev_dist;
    for (int step = 0; step < cfg.episode_steps; ++step) {
        const double a = act(policy, x, v, target);
        v += cfg.dt * (cfg.thrust * a - cfg.friction * v + cfg.drift);
        x += cfg.dt * v;
        dist = std::abs(x - target);
        if (reward) {
            slots[kDist] = dist;
            slots[kVelX] = v;
            slots[kPrevDist] = prev_dist;
            slots[kTargetX] = target;
            slots[kActionMag] = std::abs(a);
            out.episode_return += reward->evaluate(slots, component_values);
            for (std::size_t c = 0; c < n_components; ++c) out.component_means[c] += component_values[c];
        }
        prev_dist = dist;
        out.length = step + 1;
        if (std::abs(x) > cfg.bound) {
            out.out_of_bounds = true;
            break;
        }
    }
    for (double& m : out.component_means) m /= static_cast<double>(out.length);
    out.final_dist = dist;
    return out;
}

std::vector<double> eval_targets(const ToyTaskConfig& cfg) {
    std::vector<double> targets(static_cast<std::size_t>(cfg.eval_targets));
    if (cfg.eval_targets == 1) {
        targets[0] = 0.0;
        return targets;
    }
    for (int i = 0; i < cfg.eval_targets; ++i)
        targets[static_cast<std::size_t>(i)] = -1.0 + 2.0 * static_cast<double>(i) / (cfg.eval_targets - 1);
    return targets;
}

double mean_of(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

const std::vector<std::string>& toy_vocabulary() {
    static const std::vector<std::string> vocab = {"dist", "vel_x", "prev_dist", "target_x", "action_mag"};
    return vocab;
}

double toy_success_rate(std::span<const double> policy, const ToyTaskConfig& cfg) {
    if (policy.size() != kPolicyDims) throw DimensionMismatch("toy policy has three parameters");
    const Policy p{policy[0], policy[1], policy[2]};
    const auto targets = eval_targets(cfg);
    int successes = 0;
    for (double t : targets) {
        const auto r = run_episode(p, t, cfg, nullptr);
        if (!r.out_of_bounds && r.final_dist < cfg.success_radius) ++successes;
    }
    return static_cast<double>(successes) / static_cast<double>(targets.size());
}

TrainingFeedback toy_rl_train(const dsl::RewardExpr& expr, std::uint64_t seed, const ToyTaskConfig& cfg) {
    if (cfg.train_steps < static_cast<int>(kSnapshotCount))
        throw Error(fmt::format("train_steps must be at least {}", kSnapshotCount));
    const dsl::CompiledReward reward(expr, toy_vocabulary());
    const std::size_t n_components = reward.component_count();

    // One CEM generation per snapshot window.
    const int population = cfg.train_steps / static_cast<int>(kSnapshotCount);
    const int elite = std::clamp(static_cast<int>(std::lround(cfg.elite_fraction * population)), 1, population);

    Rng rng(seed);
    Policy mean{};
    Policy stddev;
    stddev.fill(cfg.initial_std);

    std::vector<std::vector<double>> component_snapshots(n_components);
    std::vector<std::vector<double>> component_all(n_components);
    std::vector<double> score_snapshots;
    std::vector<double> length_snapshots;
    std::vector<double> length_all;

    for (std::size_t gen = 0; gen < kSnapshotCount; ++gen) {
        const double target = rng.uniform(-1.0, 1.0);
        std::vector<Policy> samples(static_cast<std::size_t>(population));
        std::vector<double> returns(samples.size());
        std::vector<double> window_lengths;
        std::vector<std::vector<double>> window_components(n_components);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            for (std::size_t d = 0; d < kPolicyDims; ++d) samples[i][d] = mean[d] + stddev[d] * rng.normal();
            const auto r = run_episode(samples[i], target, cfg, &reward);
            returns[i] = r.episode_return;
            window_lengths.push_back(r.length);
            length_all.push_back(r.length);
            for (std::size_t c = 0; c < n_components; ++c) {
                window_components[c].push_back(r.component_means[c]);
                component_all[c].push_back(r.component_means[c]);
            }
        }

        std::vector<std::size_t> order(samples.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return returns[a] > returns[b]; });
        for (std::size_t d = 0; d < kPolicyDims; ++d) {
            double m = 0.0;
            for (int e = 0; e < elite; ++e) m += samples[order[static_cast<std::size_t>(e)]][d];
            m /= elite;
            double var = 0.0;
            for (int e = 0; e < elite; ++e) {
                const double diff = samples[order[static_cast<std::size_t>(e)]][d] - m;
                var += diff * diff;
            }
            mean[d] = m;
            stddev[d] = std::sqrt(var / elite) + cfg.std_floor;
        }

        score_snapshots.push_back(toy_success_rate(mean, cfg));
        length_snapshots.push_back(mean_of(window_lengths));
        for (std::size_t c = 0; c < n_components; ++c)
            component_snapshots[c].push_back(mean_of(window_components[c]));
    }

    TrainingFeedback fb;
    fb.epoch_freq = population;
    for (std::size_t c = 0; c < n_components; ++c)
        fb.components.emplace_back(reward.component_name(c),
                                   SeriesSummary::with_run_stats(component_snapshots[c], component_all[c]));
    fb.final_score = *std::max_element(score_snapshots.begin(), score_snapshots.end());
    fb.task_score = SeriesSummary::from_values(std::move(score_snapshots));
    fb.episode_lengths = SeriesSummary::with_run_stats(length_snapshots, length_all);
    return fb;
}

ToyEvaluator::ToyEvaluator(ToyTaskConfig config) : config_(config) {}

int ToyEvaluator::epoch_freq() const { return config_.train_steps / static_cast<int>(kSnapshotCount); }

EvalOutcome ToyEvaluator::evaluate(const CandidateProgram& candidate, const EvalRequest& request) {
    dsl::RewardExpr expr;
    try {
        expr = dsl::parse(candidate.source_text, toy_vocabulary());
    } catch (const dsl::DslError& e) {
        return EvalOutcome::failure(e.traceback());
    }
    return EvalOutcome::success(toy_rl_train(expr, request.seed, config_));
}

}  // namespace rfsearch
