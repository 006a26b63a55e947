#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rfsearch/config.hpp"
#include "rfsearch/orchestrator.hpp"

namespace rfsearch {

/// A bench method: "greedy", "evolution" or "mcts" followed by optional
/// "."-separated modifiers: a selection policy (uct, dfs, bfs, greedy),
/// "basic" for the basic-only action mode, "noverify", "noalign".
struct BenchMethod {
    std::string name;
    enum class Family { mcts, greedy, evolution } family = Family::mcts;
    SelectionPolicy policy = SelectionPolicy::uct;
    bool basic_only = false;
    bool self_verify = true;
    bool thought_align = true;

    /// Throws ConfigError.
    static BenchMethod parse(const std::string& text);
    SearchConfig apply(SearchConfig config) const;
};

/// Comma-separated method list.
std::vector<BenchMethod> parse_methods(const std::string& list);

/// Best-so-far after each sample, padded to the budget with the last value.
using Curve = std::vector<std::optional<double>>;

Curve run_method(const BenchMethod& method, const SearchConfig& config);

struct BenchResult {
    std::vector<BenchMethod> methods;
    std::vector<std::uint64_t> seeds;
    /// curves[method][seed]
    std::vector<std::vector<Curve>> curves;
    int budget = 0;
};

/// Runs every method on seeds config.seed, config.seed + 1, ...
BenchResult run_bench(const SearchConfig& config, const std::vector<BenchMethod>& methods, int seeds);

/// `t,<method>...` rows holding the median best-so-far over seeds.
std::string bench_csv(const BenchResult& result);
/// `method,seed,best` rows.
std::string bench_final_csv(const BenchResult& result);

std::optional<double> median(std::vector<double> values);

}  // namespace rfsearch
