#include "rfsearch/orchestrator.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <thread>

#include <fmt/format.h>

#include "rfsearch/errors.hpp"
#include "rfsearch/hash.hpp"
#include "rfsearch/persistence.hpp"
#include "rfsearch/prompts.hpp"

namespace rfsearch {

namespace {

// Stream tags keep designer and evaluator seeds apart from each other.
constexpr std::uint64_t kDesignerStream = 0x64657369676e6572ULL;
constexpr std::uint64_t kEvalStream = 0x6576616c75617465ULL;

class PhaseTimer {
public:
    PhaseTimer(RunTrace& trace, const char* phase)
        : trace_(trace), phase_(phase), start_(std::chrono::steady_clock::now()) {}
    ~PhaseTimer() {
        trace_.phase_seconds[phase_] +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    RunTrace& trace_;
    const char* phase_;
    std::chrono::steady_clock::time_point start_;
};

NodeState failed_node(NodeState node, CandidateProgram candidate, std::string traceback) {
    node.candidate = std::move(candidate);
    node.status = NodeStatus::failed;
    node.traceback = std::move(traceback);
    return node;
}

}  // namespace

double lambda_schedule(double lambda0, int t, int budget) {
    return lambda0 * static_cast<double>(budget - t) / static_cast<double>(budget);
}

std::string RunTrace::hash() const {
    std::string text;
    for (const auto& e : entries) {
        text += fmt::format("{} {} {} {} {} {} {} {}\n", e.t, e.node.value, to_string(e.kind),
                            e.score ? fmt::format("{:a}", *e.score) : "-", fmt::format("{:a}", e.lambda),
                            e.selection_t, e.selected.value,
                            e.best_so_far ? fmt::format("{:a}", *e.best_so_far) : "-");
    }
    return sha256_hex(text);
}

// ---------------------------------------------------------------- simulate

NodeState simulate(const Job& job, const Designer& designer, Evaluator& evaluator, const TaskInfo& task) {
    Rng rng(job.designer_seed);
    NodeState node;
    node.id = job.node;
    node.action_tag = job.spec.kind;

    CandidateProgram candidate;
    candidate.lineage_kind = job.spec.kind;
    if (job.parent != kRootId) candidate.lineage_parent = job.parent;

    std::string traceback;
    bool have_code = false;
    try {
        const PromptBundle prompt = assemble_prompt(job.spec.kind, job.context, task, evaluator.epoch_freq());
        try {
            const DesignerResponse response = designer.generate(prompt, rng);
            candidate.source_text = *response.parsed_code;
            candidate.design_thought = response.parsed_thought.value_or("");
            have_code = true;
        } catch (const ParseError& e) {
            traceback = fmt::format("ParseError: {}", e.what());
        }
    } catch (const Error& e) {
        return failed_node(std::move(node), std::move(candidate), fmt::format("{}", e.what()));
    }

    int attempt = 0;
    std::optional<TrainingFeedback> feedback;
    while (true) {
        if (have_code) {
            EvalOutcome outcome;
            try {
                outcome = evaluator.evaluate(candidate, EvalRequest{job.eval_seed, job.node, attempt});
            } catch (const Error& e) {
                outcome = EvalOutcome::failure(e.what());
            }
            if (outcome.ok()) {
                feedback = std::move(outcome.feedback);
                break;
            }
            traceback = outcome.traceback.value_or("unknown evaluation error");
        }
        try {
            candidate = designer.repair(candidate, traceback, task, rng);
            have_code = true;
        } catch (const RetryExhausted&) {
            return failed_node(std::move(node), std::move(candidate), std::move(traceback));
        } catch (const ParseError& e) {
            // A reply without code still spends a repair attempt.
            candidate.revision += 1;
            candidate.lineage_kind = ActionKind::repair;
            traceback = fmt::format("ParseError: {}", e.what());
            have_code = false;
        } catch (const Error& e) {
            return failed_node(std::move(node), std::move(candidate), e.what());
        }
        ++attempt;
    }

    candidate.design_thought = designer.align_thought(candidate, task, rng);
    node.self_verify = designer.self_verify(candidate, task, rng);
    node.candidate = std::move(candidate);
    node.score = feedback->final_score;
    node.feedback = std::move(feedback);
    node.status = NodeStatus::evaluated;
    return node;
}

std::vector<NodeState> simulate_all(const std::vector<Job>& jobs, int parallelism, const Designer& designer,
                                    Evaluator& evaluator, const TaskInfo& task) {
    std::vector<NodeState> results(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                results[i] = simulate(jobs[i], designer, evaluator, task);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(parallelism, 1)), jobs.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

Designer make_designer(const SearchConfig& config, std::shared_ptr<DesignerBackend> backend) {
    DesignerOptions options;
    options.retry_limit = config.retry_limit;
    options.thought_align = config.ablations.thought_align;
    options.self_verify = config.ablations.self_verify;
    return Designer(std::move(backend), options);
}

// ---------------------------------------------------------------- search

SearchState::SearchState(SearchConfig c) : config(std::move(c)), elite(config.elite_capacity), rng(config.seed) {}

Search::Search(SearchConfig config, std::shared_ptr<DesignerBackend> backend, std::shared_ptr<Evaluator> evaluator)
    : Search(SearchState(std::move(config)), std::move(backend), std::move(evaluator)) {}

Search::Search(SearchState state, std::shared_ptr<DesignerBackend> backend, std::shared_ptr<Evaluator> evaluator)
    : state_(std::move(state)),
      backend_(std::move(backend)),
      evaluator_(std::move(evaluator)),
      designer_(make_designer(state_.config, backend_)) {
    state_.config.validate();
    if (!evaluator_) throw ConfigError("search needs an evaluator");
}

void Search::record(const NodeState& node, ActionKind kind, double lambda, int selection_t, NodeId selected) {
    TraceEntry entry;
    entry.t = static_cast<int>(state_.trace.entries.size()) + 1;
    entry.node = node.id;
    entry.kind = kind;
    entry.score = node.score;
    entry.lambda = lambda;
    entry.selection_t = selection_t;
    entry.selected = selected;
    entry.best_so_far = state_.trace.entries.empty() ? std::nullopt : state_.trace.entries.back().best_so_far;
    if (node.score && (!entry.best_so_far || *node.score > *entry.best_so_far)) entry.best_so_far = node.score;
    state_.trace.entries.push_back(entry);
}

void Search::initialize() {
    if (state_.initialized) return;
    const SearchConfig& cfg = state_.config;
    PhaseTimer timer(state_.trace, "init");

    std::vector<Job> jobs;
    for (int i = 0; i < cfg.init_count; ++i) {
        Job job;
        job.node = NodeId{static_cast<std::uint32_t>(state_.tree.size() + jobs.size())};
        job.spec.kind = ActionKind::init;
        job.designer_seed = mix_seed(mix_seed(cfg.seed, kDesignerStream), job.node.value);
        job.eval_seed = mix_seed(mix_seed(cfg.seed, kEvalStream), job.node.value);
        jobs.push_back(std::move(job));
    }
    auto results = simulate_all(jobs, cfg.parallelism, designer_, *evaluator_, cfg.task);
    if (std::none_of(results.begin(), results.end(),
                     [](const NodeState& n) { return n.status == NodeStatus::evaluated; }))
        throw AllInitFailed(fmt::format("all {} initial candidates failed", results.size()));

    const double lambda = lambda_schedule(cfg.lambda0, 0, cfg.budget);
    for (auto& node : results) {
        const NodeId id = state_.tree.attach(kRootId, std::move(node));
        const NodeState& attached = state_.tree.node(id);
        if (attached.score) state_.elite.update(id, *attached.score);
        record(attached, ActionKind::init, lambda, 0, kRootId);
    }
    backup(state_.tree, NodeId{1}, cfg.eta);
    state_.t = cfg.init_count;
    state_.initialized = true;
    if (cfg.early_stop.target_score && state_.trace.entries.back().best_so_far &&
        *state_.trace.entries.back().best_so_far >= *cfg.early_stop.target_score)
        state_.stopped_early = true;
    if (on_step) on_step(state_);
}

bool Search::finished() const {
    return state_.initialized && (state_.stopped_early || state_.t >= state_.config.budget);
}

void Search::run_iteration() {
    if (!state_.initialized) throw Error("search is not initialized");
    if (finished()) return;
    const SearchConfig& cfg = state_.config;
    const int t0 = state_.t;
    const double lambda = lambda_schedule(cfg.lambda0, t0, cfg.budget);

    NodeId selected;
    std::vector<ActionSpec> specs;
    {
        PhaseTimer timer(state_.trace, "select");
        selected = select_node(state_.tree, cfg.selection_policy, lambda);
        specs = schedule_expansion(cfg.action_counts, cfg.k_range, state_.rng);
        specs = ablation_filter(specs, cfg.ablations.action_mode, cfg.k_range, state_.rng);
        const auto room = static_cast<std::size_t>(cfg.budget - t0);
        if (specs.size() > room) specs.resize(room);
        for (auto& spec : specs) {
            try {
                spec.context_nodes = select_context_nodes(spec, selected, state_.tree, state_.elite, state_.rng);
            } catch (const EliteEmpty&) {
                // No crossover partner yet: fall back to a structural mutation.
                spec = ActionSpec{ActionKind::m1_mutation_structure, std::nullopt, {selected}};
            }
        }
    }

    std::vector<NodeState> results;
    {
        PhaseTimer timer(state_.trace, "expand");
        std::vector<Job> jobs;
        for (const auto& spec : specs) {
            Job job;
            job.node = NodeId{static_cast<std::uint32_t>(state_.tree.size() + jobs.size())};
            job.spec = spec;
            job.parent = selected;
            for (NodeId id : spec.context_nodes) job.context.push_back(state_.tree.node(id));
            job.designer_seed = mix_seed(mix_seed(cfg.seed, kDesignerStream), job.node.value);
            job.eval_seed = mix_seed(mix_seed(cfg.seed, kEvalStream), job.node.value);
            jobs.push_back(std::move(job));
        }
        results = simulate_all(jobs, cfg.parallelism, designer_, *evaluator_, cfg.task);
    }

    {
        PhaseTimer timer(state_.trace, "backup");
        const std::optional<double> best_before =
            state_.trace.entries.empty() ? std::nullopt : state_.trace.entries.back().best_so_far;
        std::optional<NodeId> first;
        for (std::size_t i = 0; i < results.size(); ++i) {
            const NodeId id = state_.tree.attach(selected, std::move(results[i]));
            if (!first) first = id;
            const NodeState& attached = state_.tree.node(id);
            if (attached.score) state_.elite.update(id, *attached.score);
            record(attached, specs[i].kind, lambda, t0, selected);
        }
        if (first) backup(state_.tree, *first, cfg.eta);
        state_.t = t0 + static_cast<int>(results.size());

        const std::optional<double> best_after = state_.trace.entries.back().best_so_far;
        if (best_after && (!best_before || *best_after > *best_before))
            state_.stale_expansions = 0;
        else
            ++state_.stale_expansions;
        if (cfg.early_stop.target_score && best_after && *best_after >= *cfg.early_stop.target_score)
            state_.stopped_early = true;
        if (cfg.early_stop.patience && state_.stale_expansions >= *cfg.early_stop.patience)
            state_.stopped_early = true;
    }
    if (on_step) on_step(state_);
}

void Search::run(std::optional<int> stop_at) {
    initialize();
    while (!finished() && (!stop_at || state_.t < *stop_at)) run_iteration();
}

std::string run_fingerprint(const SearchState& state) {
    return sha256_hex(state.trace.hash() + "\n" + tree_to_json(state.tree).dump());
}

}  // namespace rfsearch
