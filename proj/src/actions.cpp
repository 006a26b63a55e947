#include "rfsearch/actions.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "rfsearch/errors.hpp"

namespace rfsearch {

namespace {

int draw_k(KRange range, Rng& rng) {
    if (range.min < 1 || range.max < range.min) throw ConfigError("invalid k range");
    return range.min + static_cast<int>(rng.below(static_cast<std::size_t>(range.max - range.min + 1)));
}

}  // namespace

std::vector<ActionSpec> schedule_expansion(const ActionCounts& counts, KRange k_range, Rng& rng) {
    if (std::any_of(counts.begin(), counts.end(), [](int c) { return c < 0; }))
        throw ConfigError("action counts must be non-negative");
    if (std::accumulate(counts.begin(), counts.end(), 0) == 0) throw ZeroActions("every action count is zero");
    std::vector<ActionSpec> specs;
    for (std::size_t i = 0; i < kExpansionKinds.size(); ++i) {
        for (int n = 0; n < counts[i]; ++n) {
            ActionSpec spec;
            spec.kind = kExpansionKinds[i];
            if (uses_group_context(spec.kind)) spec.k = draw_k(k_range, rng);
            specs.push_back(std::move(spec));
        }
    }
    return specs;
}

std::vector<NodeId> select_context_nodes(const ActionSpec& spec, NodeId parent, const SearchTree& tree,
                                         const EliteSet& elite, Rng& rng) {
    const int k = spec.k.value_or(1);
    switch (spec.kind) {
        case ActionKind::init: return {};
        case ActionKind::m1_mutation_structure:
        case ActionKind::m2_mutation_params:
        case ActionKind::basic:
        case ActionKind::repair:
        case ActionKind::align:
        case ActionKind::verify: return {parent};
        case ActionKind::c3_crossover: {
            const EliteSet others = elite.without(parent);
            if (others.empty()) throw EliteEmpty("no elite entry besides the parent");
            std::vector<NodeId> out{parent};
            if (k > 1) {
                auto picks = others.sample(static_cast<std::size_t>(k - 1), rng);
                out.insert(out.end(), picks.begin(), picks.end());
            }
            return out;
        }
        case ActionKind::r4_path_reasoning: {
            std::vector<NodeId> out;
            std::optional<NodeId> cur = parent;
            while (cur && !tree.is_root(*cur) && static_cast<int>(out.size()) < k) {
                out.push_back(*cur);
                cur = tree.node(*cur).parent;
            }
            return out;
        }
        case ActionKind::d5_different_thought: {
            std::vector<NodeId> off_path;
            std::vector<NodeId> fallback;
            for (NodeId id : tree.evaluated_nodes()) {
                if (id == parent) continue;
                fallback.push_back(id);
                if (!tree.is_ancestor(id, parent) && !tree.is_ancestor(parent, id)) off_path.push_back(id);
            }
            std::vector<NodeId>& pool = off_path.empty() ? fallback : off_path;
            std::vector<NodeId> out{parent};
            for (int i = 1; i < k && !pool.empty(); ++i) {
                const std::size_t pick = rng.below(pool.size());
                out.push_back(pool[pick]);
                pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
            }
            return out;
        }
    }
    return {parent};
}

ActionMode ActionMode::parse(const std::string& text) {
    ActionMode mode;
    if (text == "full") return mode;
    if (text == "basic_only" || text == "basic") {
        mode.kind = Kind::basic_only;
        return mode;
    }
    // "m1,c3" or "subset:m1,c3"
    std::string list = text.rfind("subset:", 0) == 0 ? text.substr(7) : text;
    std::stringstream ss(list);
    std::string item;
    mode.kind = Kind::subset;
    while (std::getline(ss, item, ',')) {
        auto kind = action_kind_from_string(item);
        if (!kind || std::find(kExpansionKinds.begin(), kExpansionKinds.end(), *kind) == kExpansionKinds.end())
            throw ConfigError(fmt::format("unknown action '{}' in action mode '{}'", item, text));
        if (std::find(mode.subset.begin(), mode.subset.end(), *kind) == mode.subset.end()) mode.subset.push_back(*kind);
    }
    if (mode.subset.empty()) throw ConfigError(fmt::format("empty action subset '{}'", text));
    // Keep the canonical expansion order regardless of how the list was written.
    std::sort(mode.subset.begin(), mode.subset.end(), [](ActionKind a, ActionKind b) {
        auto pos = [](ActionKind x) { return std::find(kExpansionKinds.begin(), kExpansionKinds.end(), x); };
        return pos(a) < pos(b);
    });
    return mode;
}

std::string ActionMode::to_string() const {
    switch (kind) {
        case Kind::full: return "full";
        case Kind::basic_only: return "basic_only";
        case Kind::subset: {
            std::vector<std::string> names;
            for (auto k : subset) names.emplace_back(short_name(k));
            return fmt::format("subset:{}", fmt::join(names, ","));
        }
    }
    return "full";
}

std::vector<ActionSpec> ablation_filter(const std::vector<ActionSpec>& specs, const ActionMode& mode, KRange k_range,
                                        Rng& rng) {
    switch (mode.kind) {
        case ActionMode::Kind::full: return specs;
        case ActionMode::Kind::basic_only: {
            std::vector<ActionSpec> out(specs.size());
            for (auto& s : out) s.kind = ActionKind::basic;
            return out;
        }
        case ActionMode::Kind::subset: {
            const std::size_t total = specs.size();
            const std::size_t kinds = mode.subset.size();
            std::vector<ActionSpec> out;
            for (std::size_t i = 0; i < kinds; ++i) {
                const ActionKind kind = mode.subset[i];
                const std::size_t count = total / kinds + (i < total % kinds ? 1 : 0);
                // Reuse the original specs of this kind (and their k) first.
                std::vector<ActionSpec> existing;
                for (const auto& s : specs)
                    if (s.kind == kind) existing.push_back(s);
                for (std::size_t n = 0; n < count; ++n) {
                    if (n < existing.size()) {
                        out.push_back(existing[n]);
                        continue;
                    }
                    ActionSpec s;
                    s.kind = kind;
                    if (uses_group_context(kind)) s.k = draw_k(k_range, rng);
                    out.push_back(std::move(s));
                }
            }
            return out;
        }
    }
    return specs;
}

}  // namespace rfsearch
