#include <algorithm>
#include <numeric>

#include "rfsearch/errors.hpp"
#include "rfsearch/orchestrator.hpp"

namespace rfsearch {

namespace {

constexpr std::uint64_t kDesignerStream = 0x636f6d7061726531ULL;
constexpr std::uint64_t kEvalStream = 0x636f6d7061726532ULL;

class Runner {
public:
    Runner(const SearchConfig& config, std::shared_ptr<DesignerBackend> backend, std::shared_ptr<Evaluator> evaluator)
        : config_(config), designer_(make_designer(config, std::move(backend))), evaluator_(std::move(evaluator)) {}

    int remaining() const { return config_.budget - static_cast<int>(result_.nodes.size()); }

    Job job(ActionKind kind, const std::vector<std::size_t>& context) const {
        Job j;
        j.node = NodeId{static_cast<std::uint32_t>(result_.nodes.size() + pending_)};
        j.spec.kind = kind;
        if (uses_group_context(kind)) j.spec.k = static_cast<int>(context.size());
        for (std::size_t i : context) j.context.push_back(result_.nodes[i]);
        j.designer_seed = mix_seed(mix_seed(config_.seed, kDesignerStream), j.node.value);
        j.eval_seed = mix_seed(mix_seed(config_.seed, kEvalStream), j.node.value);
        return j;
    }

    void queue(ActionKind kind, const std::vector<std::size_t>& context) {
        jobs_.push_back(job(kind, context));
        ++pending_;
    }

    /// Runs queued jobs and returns the indices of the new nodes.
    std::vector<std::size_t> flush() {
        auto results = simulate_all(jobs_, config_.parallelism, designer_, *evaluator_, config_.task);
        std::vector<std::size_t> added;
        for (std::size_t i = 0; i < results.size(); ++i) {
            TraceEntry e;
            e.t = static_cast<int>(result_.nodes.size()) + 1;
            e.node = results[i].id;
            e.kind = jobs_[i].spec.kind;
            e.score = results[i].score;
            e.best_so_far = result_.trace.entries.empty() ? std::nullopt : result_.trace.entries.back().best_so_far;
            if (e.score && (!e.best_so_far || *e.score > *e.best_so_far)) {
                e.best_so_far = e.score;
                result_.best = result_.nodes.size();
            }
            result_.trace.entries.push_back(e);
            added.push_back(result_.nodes.size());
            result_.nodes.push_back(std::move(results[i]));
        }
        jobs_.clear();
        pending_ = 0;
        return added;
    }

    const NodeState& node(std::size_t i) const { return result_.nodes[i]; }
    ComparatorResult take() { return std::move(result_); }

    double fitness(std::size_t i) const {
        const auto& s = result_.nodes[i].score;
        return s ? *s : -std::numeric_limits<double>::infinity();
    }

private:
    const SearchConfig& config_;
    Designer designer_;
    std::shared_ptr<Evaluator> evaluator_;
    ComparatorResult result_;
    std::vector<Job> jobs_;
    std::size_t pending_ = 0;
};

ActionKind alternating_mutation(int i) {
    return i % 2 == 0 ? ActionKind::m1_mutation_structure : ActionKind::m2_mutation_params;
}

ComparatorResult run_greedy(Runner& runner) {
    const int first = std::min(kComparatorBatch, runner.remaining());
    for (int i = 0; i < first; ++i) runner.queue(ActionKind::init, {});
    auto batch = runner.flush();
    std::optional<std::size_t> best;
    auto consider = [&](const std::vector<std::size_t>& ids) {
        for (std::size_t id : ids)
            if (runner.node(id).score && (!best || runner.fitness(id) > runner.fitness(*best))) best = id;
    };
    consider(batch);
    while (runner.remaining() > 0) {
        const int n = std::min(kComparatorBatch, runner.remaining());
        for (int i = 0; i < n; ++i) {
            if (best)
                runner.queue(alternating_mutation(i), {*best});
            else
                runner.queue(ActionKind::init, {});
        }
        consider(runner.flush());
    }
    return runner.take();
}

ComparatorResult run_evolution(Runner& runner, Rng& rng) {
    const int first = std::min(kComparatorBatch, runner.remaining());
    for (int i = 0; i < first; ++i) runner.queue(ActionKind::init, {});
    std::vector<std::size_t> population = runner.flush();

    auto by_fitness = [&](std::size_t a, std::size_t b) {
        const double fa = runner.fitness(a);
        const double fb = runner.fitness(b);
        return fa != fb ? fa > fb : a < b;
    };
    auto tournament = [&] {
        const std::size_t a = population[rng.below(population.size())];
        const std::size_t b = population[rng.below(population.size())];
        return by_fitness(a, b) ? a : b;
    };

    while (runner.remaining() > 0) {
        const int n = std::min(kComparatorBatch, runner.remaining());
        std::vector<std::size_t> alive;
        for (std::size_t id : population)
            if (runner.node(id).score) alive.push_back(id);
        for (int i = 0; i < n; ++i) {
            if (alive.empty()) {
                runner.queue(ActionKind::init, {});
                continue;
            }
            const std::size_t p1 = tournament();
            const std::size_t p2 = tournament();
            const bool both_ok = runner.node(p1).score && runner.node(p2).score;
            if (rng.uniform() < 0.5 && both_ok && p1 != p2) {
                runner.queue(ActionKind::c3_crossover, {p1, p2});
            } else {
                const std::size_t p = runner.node(p1).score ? p1 : alive[rng.below(alive.size())];
                runner.queue(alternating_mutation(i), {p});
            }
        }
        auto children = runner.flush();
        population.insert(population.end(), children.begin(), children.end());
        std::stable_sort(population.begin(), population.end(), by_fitness);
        population.resize(std::min<std::size_t>(population.size(), kComparatorBatch));
    }
    return runner.take();
}

}  // namespace

ComparatorResult run_comparator(ComparatorKind kind, const SearchConfig& config,
                                std::shared_ptr<DesignerBackend> backend, std::shared_ptr<Evaluator> evaluator) {
    config.validate();
    if (!evaluator) throw ConfigError("comparator needs an evaluator");
    Runner runner(config, std::move(backend), std::move(evaluator));
    Rng rng(mix_seed(config.seed, 0x65766f6cULL));
    return kind == ComparatorKind::greedy ? run_greedy(runner) : run_evolution(runner, rng);
}

}  // namespace rfsearch
