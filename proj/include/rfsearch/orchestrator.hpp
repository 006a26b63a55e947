#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rfsearch/actions.hpp"
#include "rfsearch/config.hpp"
#include "rfsearch/designer.hpp"
#include "rfsearch/elite_set.hpp"
#include "rfsearch/evaluation.hpp"
#include "rfsearch/rng.hpp"
#include "rfsearch/search_tree.hpp"

namespace rfsearch {

/// lambda0 * (N - t) / N.
double lambda_schedule(double lambda0, int t, int budget);

struct TraceEntry {
    int t = 0;  // 1-based sample ordinal
    NodeId node;
    ActionKind kind = ActionKind::init;
    std::optional<double> score;
    double lambda = 0.0;
    /// Budget cursor when the expanded node was selected.
    int selection_t = 0;
    NodeId selected;
    std::optional<double> best_so_far;

    bool operator==(const TraceEntry&) const = default;
};

struct RunTrace {
    std::vector<TraceEntry> entries;
    /// Wall-clock seconds per phase. Not part of the hash.
    std::map<std::string, double> phase_seconds;

    /// SHA-256 over every entry (exact score and lambda bits).
    std::string hash() const;
};

// ---------------------------------------------------------------- one sample

/// Everything a worker needs to produce one node, copied off the tree.
struct Job {
    NodeId node;
    ActionSpec spec;
    NodeId parent = kRootId;
    std::vector<NodeState> context;
    std::uint64_t designer_seed = 0;
    std::uint64_t eval_seed = 0;
};

/// Prompt, generate, evaluate with the repair loop, align and self-verify.
/// Never throws for designer or evaluator trouble: the node comes back
/// failed with the last traceback.
NodeState simulate(const Job& job, const Designer& designer, Evaluator& evaluator, const TaskInfo& task);

/// Runs `simulate` over `jobs` with up to `parallelism` workers; results
/// are in job order.
std::vector<NodeState> simulate_all(const std::vector<Job>& jobs, int parallelism, const Designer& designer,
                                    Evaluator& evaluator, const TaskInfo& task);

Designer make_designer(const SearchConfig& config, std::shared_ptr<DesignerBackend> backend);

// ---------------------------------------------------------------- search

/// Everything needed to continue a run.
struct SearchState {
    SearchConfig config;
    SearchTree tree;
    EliteSet elite{8};
    Rng rng;
    int t = 0;
    bool initialized = false;
    bool stopped_early = false;
    /// Expansions since the best score last improved.
    int stale_expansions = 0;
    RunTrace trace;

    explicit SearchState(SearchConfig c = {});
};

/// The tree search loop. Owns its state; not thread-safe.
class Search {
public:
    Search(SearchConfig config, std::shared_ptr<DesignerBackend> backend, std::shared_ptr<Evaluator> evaluator);
    /// Continues from a saved state.
    Search(SearchState state, std::shared_ptr<DesignerBackend> backend, std::shared_ptr<Evaluator> evaluator);

    /// Creates the init nodes; t becomes the number created. Throws AllInitFailed.
    void initialize();
    /// One select / expand / simulate / backup round.
    void run_iteration();
    bool finished() const;
    /// Runs until finished, or until t reaches `stop_at` when given.
    void run(std::optional<int> stop_at = std::nullopt);

    const SearchState& state() const { return state_; }
    std::optional<NodeId> best() const { return state_.tree.best_node(); }

    /// Called after initialization and after every iteration.
    std::function<void(const SearchState&)> on_step;

private:
    void record(const NodeState& node, ActionKind kind, double lambda, int selection_t, NodeId selected);

    SearchState state_;
    std::shared_ptr<DesignerBackend> backend_;
    std::shared_ptr<Evaluator> evaluator_;
    Designer designer_;
};

/// SHA-256 over the trace hash and the canonical tree content.
std::string run_fingerprint(const SearchState& state);

// ---------------------------------------------------------------- comparators

enum class ComparatorKind { greedy, evolution };

struct ComparatorResult {
    std::vector<NodeState> nodes;
    RunTrace trace;
    std::optional<std::size_t> best;  // index into nodes
};

/// Same designer, evaluator, seed and budget as the tree search.
/// greedy: batches of 16, the next batch mutates the best so far.
/// evolution: population of 16, tournament parents, crossover or mutation,
/// (mu + lambda) truncation.
ComparatorResult run_comparator(ComparatorKind kind, const SearchConfig& config,
                                std::shared_ptr<DesignerBackend> backend, std::shared_ptr<Evaluator> evaluator);

inline constexpr int kComparatorBatch = 16;

}  // namespace rfsearch
