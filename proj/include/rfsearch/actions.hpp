#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rfsearch/elite_set.hpp"
#include "rfsearch/rng.hpp"
#include "rfsearch/search_tree.hpp"
#include "rfsearch/types.hpp"

namespace rfsearch {

struct ActionSpec {
    ActionKind kind = ActionKind::init;
    std::optional<int> k;
    std::vector<NodeId> context_nodes;

    bool operator==(const ActionSpec&) const = default;
};

/// Counts per expansion for m1, m2, c3, r4, d5 in that order.
using ActionCounts = std::array<int, 5>;

inline constexpr std::array<ActionKind, 5> kExpansionKinds = {
    ActionKind::m1_mutation_structure, ActionKind::m2_mutation_params, ActionKind::c3_crossover,
    ActionKind::r4_path_reasoning, ActionKind::d5_different_thought};

struct KRange {
    int min = 2;
    int max = 4;
    bool operator==(const KRange&) const = default;
};

/// counts[i] specs of each kind in the fixed m1, m2, c3, r4, d5 order, with k
/// drawn per group spec from `k_range`. Throws ZeroActions.
std::vector<ActionSpec> schedule_expansion(const ActionCounts& counts, KRange k_range, Rng& rng);

/// Context for one spec, parent first:
///  - m1/m2/basic: [parent]
///  - c3: parent + reciprocal-rank elite sample of k-1 (parent excluded);
///        throws EliteEmpty when no other elite entry exists
///  - r4: parent and its ancestors up to k nodes, never the root
///  - d5: parent + k-1 uniform picks among evaluated nodes off the parent's
///        root path, falling back to any other evaluated node
std::vector<NodeId> select_context_nodes(const ActionSpec& spec, NodeId parent, const SearchTree& tree,
                                         const EliteSet& elite, Rng& rng);

/// Which actions an expansion may use.
struct ActionMode {
    enum class Kind { full, basic_only, subset } kind = Kind::full;
    std::vector<ActionKind> subset;

    static ActionMode parse(const std::string& text);
    std::string to_string() const;
    bool operator==(const ActionMode&) const = default;
};

/// full: identity. basic_only: every spec becomes a parent-only `basic`
/// spec. subset: only the listed kinds, with the total count spread evenly
/// over them (remainder to the earlier kinds) and k drawn for new group specs.
std::vector<ActionSpec> ablation_filter(const std::vector<ActionSpec>& specs, const ActionMode& mode, KRange k_range,
                                        Rng& rng);

}  // namespace rfsearch
