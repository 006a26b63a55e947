#include "rfsearch/bench.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

#include "rfsearch/errors.hpp"

namespace rfsearch {

BenchMethod BenchMethod::parse(const std::string& text) {
    BenchMethod m;
    m.name = text;
    std::stringstream ss(text);
    std::string part;
    std::getline(ss, part, '.');
    if (part == "mcts") m.family = Family::mcts;
    else if (part == "greedy") m.family = Family::greedy;
    else if (part == "evolution") m.family = Family::evolution;
    else throw ConfigError(fmt::format("unknown bench method '{}'", text));
    while (std::getline(ss, part, '.')) {
        if (m.family != Family::mcts) throw ConfigError(fmt::format("method '{}' takes no modifiers", text));
        if (auto policy = selection_policy_from_string(part)) m.policy = *policy;
        else if (part == "basic") m.basic_only = true;
        else if (part == "noverify") m.self_verify = false;
        else if (part == "noalign") m.thought_align = false;
        else throw ConfigError(fmt::format("unknown modifier '{}' in bench method '{}'", part, text));
    }
    return m;
}

SearchConfig BenchMethod::apply(SearchConfig config) const {
    config.selection_policy = policy;
    if (basic_only) config.ablations.action_mode = ActionMode::parse("basic_only");
    config.ablations.self_verify = config.ablations.self_verify && self_verify;
    config.ablations.thought_align = config.ablations.thought_align && thought_align;
    return config;
}

std::vector<BenchMethod> parse_methods(const std::string& list) {
    std::vector<BenchMethod> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(BenchMethod::parse(item));
    if (out.empty()) throw ConfigError("no bench methods given");
    return out;
}

Curve run_method(const BenchMethod& method, const SearchConfig& base) {
    const SearchConfig config = method.apply(base);
    auto backend = make_designer_backend(config);
    auto evaluator = make_evaluator(config);
    RunTrace trace;
    if (method.family == BenchMethod::Family::mcts) {
        Search search(config, backend, evaluator);
        search.run();
        trace = search.state().trace;
    } else {
        const auto kind =
            method.family == BenchMethod::Family::greedy ? ComparatorKind::greedy : ComparatorKind::evolution;
        trace = run_comparator(kind, config, backend, evaluator).trace;
    }
    Curve curve;
    for (const auto& e : trace.entries) curve.push_back(e.best_so_far);
    const std::optional<double> last = curve.empty() ? std::nullopt : curve.back();
    curve.resize(static_cast<std::size_t>(config.budget), last);
    return curve;
}

BenchResult run_bench(const SearchConfig& config, const std::vector<BenchMethod>& methods, int seeds) {
    if (seeds < 1) throw ConfigError("bench needs at least one seed");
    BenchResult result;
    result.methods = methods;
    result.budget = config.budget;
    for (int i = 0; i < seeds; ++i) result.seeds.push_back(config.seed + static_cast<std::uint64_t>(i));
    for (const auto& m : methods) {
        std::vector<Curve> curves;
        for (auto seed : result.seeds) {
            SearchConfig c = config;
            c.seed = seed;
            curves.push_back(run_method(m, c));
        }
        result.curves.push_back(std::move(curves));
    }
    return result;
}

std::optional<double> median(std::vector<double> values) {
    if (values.empty()) return std::nullopt;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string bench_csv(const BenchResult& result) {
    std::string out = "t";
    for (const auto& m : result.methods) out += "," + m.name;
    out += "\n";
    for (int t = 0; t < result.budget; ++t) {
        out += std::to_string(t + 1);
        for (const auto& curves : result.curves) {
            std::vector<double> at;
            for (const auto& c : curves)
                if (c[static_cast<std::size_t>(t)]) at.push_back(*c[static_cast<std::size_t>(t)]);
            const auto m = median(at);
            out += m ? fmt::format(",{}", *m) : ",";
        }
        out += "\n";
    }
    return out;
}

std::string bench_final_csv(const BenchResult& result) {
    std::string out = "method,seed,best\n";
    for (std::size_t m = 0; m < result.methods.size(); ++m)
        for (std::size_t s = 0; s < result.seeds.size(); ++s) {
            const auto& c = result.curves[m][s];
            const auto last = c.empty() ? std::nullopt : c.back();
            out += fmt::format("{},{},{}\n", result.methods[m].name, result.seeds[s],
                               last ? fmt::format("{}", *last) : "");
        }
    return out;
}

}  // namespace rfsearch
