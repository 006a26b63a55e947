#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfsearch/search_tree.hpp"
#include "rfsearch/types.hpp"

namespace rfsearch {

/// Task description and observation code shown to the designer.
struct TaskInfo {
    std::string description;
    std::string environment;
};

/// A candidate as seen by a prompt: enough for the designer (and the mock
/// backend) to work from without access to the tree.
struct PromptContext {
    std::string design_thought;
    std::string source_text;
    std::optional<double> score;
    std::optional<TrainingFeedback> feedback;
};

struct PromptBundle {
    ActionKind kind = ActionKind::init;
    std::string system_text;
    std::string user_text;
    std::map<std::string, std::string> placeholders_resolved;
    /// Context candidates in the order they appear in the prompt.
    std::vector<PromptContext> context;
};

/// Raw template text by asset name ("m1", "verify", "system", ...).
/// Throws TemplateError for unknown names.
const std::string& prompt_template(std::string_view name);

/// Single-pass `{name}` substitution; substituted text is never rescanned.
/// Throws TemplateError when a placeholder has no value.
std::string render_template(std::string_view text, const std::map<std::string, std::string>& values,
                            std::map<std::string, std::string>* resolved = nullptr);

/// Positions of `{identifier}` tokens left in `text`.
std::vector<std::string> find_placeholders(std::string_view text);

/// Generation prompt for init, m1..d5 and basic. `context` holds the nodes
/// named by the ActionSpec in spec order; r4 chains are given parent-first
/// and rendered oldest-first. Throws MissingFeedback.
PromptBundle assemble_prompt(ActionKind kind, std::span<const NodeState> context, const TaskInfo& task,
                             int epoch_freq);

PromptBundle assemble_repair_prompt(const CandidateProgram& candidate, std::string_view traceback,
                                    const TaskInfo& task);
PromptBundle assemble_align_prompt(const CandidateProgram& candidate, const TaskInfo& task);
PromptBundle assemble_verify_prompt(const CandidateProgram& candidate, const TaskInfo& task);

}  // namespace rfsearch
