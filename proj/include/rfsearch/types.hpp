#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace rfsearch {

struct NodeId {
    std::uint32_t value = 0;
    auto operator<=>(const NodeId&) const = default;
};

inline constexpr NodeId kRootId{0};

/// What produced a candidate or which exchange a prompt drives.
/// `basic` is the parent-only generation used by the action ablation.
enum class ActionKind {
    init,
    m1_mutation_structure,
    m2_mutation_params,
    c3_crossover,
    r4_path_reasoning,
    d5_different_thought,
    repair,
    align,
    verify,
    basic,
};

std::string_view to_string(ActionKind kind);
/// Accepts both the long enum names and the short forms (m1, c3, ...).
std::optional<ActionKind> action_kind_from_string(std::string_view text);
std::string_view short_name(ActionKind kind);

/// True for kinds that carry a sampled context size k.
constexpr bool uses_group_context(ActionKind kind) {
    return kind == ActionKind::c3_crossover || kind == ActionKind::r4_path_reasoning ||
           kind == ActionKind::d5_different_thought;
}

struct CandidateProgram {
    std::string source_text;
    std::string design_thought;
    ActionKind lineage_kind = ActionKind::init;
    std::optional<NodeId> lineage_parent;
    int revision = 0;

    bool operator==(const CandidateProgram&) const = default;
};

}  // namespace rfsearch
