#include "rfsearch/types.hpp"

#include <array>
#include <utility>

namespace rfsearch {

namespace {

struct KindName {
    ActionKind kind;
    std::string_view name;
    std::string_view short_form;
};

constexpr std::array<KindName, 10> kKindNames{{
    {ActionKind::init, "init", "init"},
    {ActionKind::m1_mutation_structure, "m1_mutation_structure", "m1"},
    {ActionKind::m2_mutation_params, "m2_mutation_params", "m2"},
    {ActionKind::c3_crossover, "c3_crossover", "c3"},
    {ActionKind::r4_path_reasoning, "r4_path_reasoning", "r4"},
    {ActionKind::d5_different_thought, "d5_different_thought", "d5"},
    {ActionKind::repair, "repair", "repair"},
    {ActionKind::align, "align", "align"},
    {ActionKind::verify, "verify", "verify"},
    {ActionKind::basic, "basic", "basic"},
}};

}  // namespace

std::string_view to_string(ActionKind kind) {
    for (const auto& entry : kKindNames)
        if (entry.kind == kind) return entry.name;
    return "unknown";
}

std::string_view short_name(ActionKind kind) {
    for (const auto& entry : kKindNames)
        if (entry.kind == kind) return entry.short_form;
    return "unknown";
}

std::optional<ActionKind> action_kind_from_string(std::string_view text) {
    for (const auto& entry : kKindNames)
        if (entry.name == text || entry.short_form == text) return entry.kind;
    return std::nullopt;
}

}  // namespace rfsearch
