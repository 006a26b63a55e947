#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfsearch/dsl.hpp"
#include "rfsearch/feedback.hpp"
#include "rfsearch/types.hpp"

namespace rfsearch {

struct EvalOutcome {
    enum class Status { ok, exec_error };

    Status status = Status::exec_error;
    std::optional<TrainingFeedback> feedback;
    std::optional<std::string> traceback;

    static EvalOutcome success(TrainingFeedback fb);
    static EvalOutcome failure(std::string traceback);
    bool ok() const { return status == Status::ok; }
};

/// Identifies one evaluation so backends can derive seeds and isolate work.
struct EvalRequest {
    std::uint64_t seed = 0;
    NodeId node;
    int attempt = 0;
};

/// F(A_M(R)): trains under a candidate and reports feedback. Implementations
/// must tolerate concurrent calls.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual EvalOutcome evaluate(const CandidateProgram& candidate, const EvalRequest& request) = 0;
    /// Snapshot spacing reported in feedback, used by prompts.
    virtual int epoch_freq() const = 0;
};

// ---------------------------------------------------------------- synthetic

/// Separable deceptive landscape: each coordinate scores
///   b(x) = wide_height * g(x; wide_center, wide_width) + narrow_height * g(x; narrow_center, narrow_width)
/// with g a unit-height Gaussian bump.
struct LandscapeConfig {
    std::size_t dimension = 8;
    double wide_center = -1.0;
    double wide_width = 0.6;
    double wide_height = 0.3;
    double narrow_center = 1.0;
    double narrow_width = 0.15;
    double narrow_height = 1.0;
};

double gaussian_bump(double x, double center, double width);
double landscape_bump(double x, const LandscapeConfig& config);

/// Throws DimensionMismatch.
TrainingFeedback synthetic_score(std::span<const double> genome, const LandscapeConfig& config);

/// Genome text: whitespace- or comma-separated reals, optional leading
/// "genome" keyword, '#' comments. Throws ParseError.
std::vector<double> parse_genome(std::string_view text);
std::string format_genome(std::span<const double> genome);

class SyntheticEvaluator final : public Evaluator {
public:
    explicit SyntheticEvaluator(LandscapeConfig config = {});
    EvalOutcome evaluate(const CandidateProgram& candidate, const EvalRequest& request) override;
    int epoch_freq() const override { return 1; }
    const LandscapeConfig& config() const { return config_; }

private:
    LandscapeConfig config_;
};

// ---------------------------------------------------------------- toy reach task

/// 1-D point-mass reach task trained by the cross-entropy method. See
/// docs/toy_task.md for the full procedure.
struct ToyTaskConfig {
    int train_steps = 200;        // training episodes, split into 10 CEM generations
    double elite_fraction = 0.3;
    int episode_steps = 50;
    double dt = 0.1;
    double thrust = 2.0;
    double friction = 0.5;
    double drift = 1.5;
    double success_radius = 0.05;
    double initial_std = 0.3;
    double std_floor = 0.05;
    double bound = 3.0;            // |x| beyond this ends the episode
    int eval_targets = 11;         // evenly spaced in [-1, 1]
};

/// Reward variables exposed to candidates, in slot order.
const std::vector<std::string>& toy_vocabulary();

/// Trains with `expr` as the shaping reward. The task score is the success
/// rate of the current policy mean on fixed evaluation targets and never
/// reads the candidate reward.
TrainingFeedback toy_rl_train(const dsl::RewardExpr& expr, std::uint64_t seed, const ToyTaskConfig& config = {});

/// Success rate of a linear policy (gain, damping, bias) on the evaluation
/// targets.
double toy_success_rate(std::span<const double> policy, const ToyTaskConfig& config);

class ToyEvaluator final : public Evaluator {
public:
    explicit ToyEvaluator(ToyTaskConfig config = {});
    EvalOutcome evaluate(const CandidateProgram& candidate, const EvalRequest& request) override;
    int epoch_freq() const override;

private:
    ToyTaskConfig config_;
};

// ---------------------------------------------------------------- subprocess

struct SubprocessConfig {
    std::vector<std::string> command;
    std::chrono::milliseconds timeout{std::chrono::seconds(600)};
    std::filesystem::path work_dir;
    std::string extension = ".rfn";
    int train_steps = 200;
};

/// Runs `<command...> <run_dir>/request.json` and reads `<run_dir>/response.json`.
EvalOutcome subprocess_evaluate(const CandidateProgram& candidate, const SubprocessConfig& config,
                                const std::filesystem::path& run_dir, std::uint64_t seed);

/// Parses a trainer response document. Throws ParseError on schema violations.
EvalOutcome parse_trainer_response(const std::string& json_text);

class SubprocessEvaluator final : public Evaluator {
public:
    explicit SubprocessEvaluator(SubprocessConfig config);
    EvalOutcome evaluate(const CandidateProgram& candidate, const EvalRequest& request) override;
    int epoch_freq() const override;

private:
    SubprocessConfig config_;
};

}  // namespace rfsearch
