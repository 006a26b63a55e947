#include "rfsearch/prompts.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "rfsearch/errors.hpp"
#include "rfsearch/feedback.hpp"

namespace rfsearch {

namespace detail {
const std::map<std::string, std::string>& prompt_assets();
}

namespace {

bool is_name_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

std::string strip_trailing_newlines(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

std::string environment_block(const TaskInfo& task, std::map<std::string, std::string>& resolved) {
    return render_template(prompt_template("environment"),
                           {{"task_description", task.description}, {"environment_code", task.environment}},
                           &resolved);
}

std::string join_blocks(std::initializer_list<std::string_view> blocks) {
    std::string out;
    for (auto b : blocks) {
        if (b.empty()) continue;
        if (!out.empty()) out += "\n\n";
        out += b;
    }
    return out;
}

const char* template_name(ActionKind kind) {
    switch (kind) {
        case ActionKind::init: return "init";
        case ActionKind::m1_mutation_structure: return "m1";
        case ActionKind::m2_mutation_params: return "m2";
        case ActionKind::c3_crossover: return "c3";
        case ActionKind::r4_path_reasoning: return "r4";
        case ActionKind::d5_different_thought: return "d5";
        case ActionKind::basic: return "basic";
        case ActionKind::repair: return "repair";
        case ActionKind::align: return "align";
        case ActionKind::verify: return "verify";
    }
    return "";
}

PromptContext to_context(const CandidateProgram& c, std::optional<double> score = std::nullopt,
                         std::optional<TrainingFeedback> feedback = std::nullopt) {
    return PromptContext{c.design_thought, c.source_text, score, std::move(feedback)};
}

}  // namespace

const std::string& prompt_template(std::string_view name) {
    static const std::map<std::string, std::string, std::less<>> trimmed = [] {
        std::map<std::string, std::string, std::less<>> out;
        for (const auto& [k, v] : detail::prompt_assets()) out.emplace(k, strip_trailing_newlines(v));
        return out;
    }();
    auto it = trimmed.find(name);
    if (it == trimmed.end()) throw TemplateError(fmt::format("no prompt template named '{}'", name));
    return it->second;
}

std::string render_template(std::string_view text, const std::map<std::string, std::string>& values,
                            std::map<std::string, std::string>* resolved) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{') {
            std::size_t j = i + 1;
            while (j < text.size() && is_name_char(text[j])) ++j;
            if (j > i + 1 && j < text.size() && text[j] == '}') {
                const std::string name(text.substr(i + 1, j - i - 1));
                auto it = values.find(name);
                if (it == values.end()) throw TemplateError(fmt::format("no value for placeholder '{{{}}}'", name));
                out += it->second;
                if (resolved) (*resolved)[name] = it->second;
                i = j + 1;
                continue;
            }
        }
        out += text[i++];
    }
    return out;
}

std::vector<std::string> find_placeholders(std::string_view text) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{') continue;
        std::size_t j = i + 1;
        while (j < text.size() && is_name_char(text[j])) ++j;
        if (j > i + 1 && j < text.size() && text[j] == '}') out.emplace_back(text.substr(i + 1, j - i - 1));
    }
    return out;
}

PromptBundle assemble_prompt(ActionKind kind, std::span<const NodeState> context, const TaskInfo& task,
                             int epoch_freq) {
    PromptBundle bundle;
    bundle.kind = kind;
    bundle.system_text = prompt_template("system");

    const std::string env = environment_block(task, bundle.placeholders_resolved);
    const std::string& output_format = prompt_template("init");
    const std::string& tip = prompt_template("code_format_tip");

    if (kind == ActionKind::init) {
        bundle.user_text = join_blocks({env, output_format, tip});
        return bundle;
    }
    if (kind == ActionKind::repair || kind == ActionKind::align || kind == ActionKind::verify)
        throw TemplateError(fmt::format("'{}' prompts have dedicated assemblers", to_string(kind)));

    const bool group = uses_group_context(kind);
    if (context.empty()) throw TemplateError(fmt::format("'{}' prompt needs at least one context node", to_string(kind)));
    if (!group && context.size() != 1)
        throw TemplateError(fmt::format("'{}' prompt takes exactly the parent node", to_string(kind)));
    for (const auto& n : context)
        if (!n.feedback) throw MissingFeedback(fmt::format("context node {} has no feedback", n.id.value));

    // Path reasoning walks the chain in optimization order, oldest first.
    std::vector<const NodeState*> ordered;
    for (const auto& n : context) ordered.push_back(&n);
    if (kind == ActionKind::r4_path_reasoning) std::reverse(ordered.begin(), ordered.end());

    std::map<std::string, std::string> values;
    values["epoch_freq"] = std::to_string(epoch_freq);
    values["trained_result_analysis_tip"] = prompt_template("analysis_tip");
    if (group) {
        std::vector<std::string> functions;
        std::vector<std::string> results;
        for (std::size_t i = 0; i < ordered.size(); ++i) {
            const auto& c = ordered[i]->candidate;
            functions.push_back(
                fmt::format("Reward Function {}:\nDesign Idea: {}\nCode: {}", i + 1, c.design_thought, c.source_text));
            results.push_back(fmt::format("Reward Function {}:\n{}", i + 1, format_feedback(*ordered[i]->feedback)));
        }
        values["nums"] = std::to_string(ordered.size());
        values["reward_func_group"] = fmt::format("{}", fmt::join(functions, "\n\n"));
        values["trained_results"] = fmt::format("{}", fmt::join(results, "\n\n"));
    } else {
        const auto& n = *ordered.front();
        values["design_idea"] = n.candidate.design_thought;
        values["reward_function"] = n.candidate.source_text;
        values["trained_results"] = format_feedback(*n.feedback);
    }
    const std::string body = render_template(prompt_template(template_name(kind)), values, &bundle.placeholders_resolved);
    bundle.user_text = join_blocks({env, body, output_format, tip});
    for (const auto* n : ordered) bundle.context.push_back(to_context(n->candidate, n->score, n->feedback));
    return bundle;
}

PromptBundle assemble_repair_prompt(const CandidateProgram& candidate, std::string_view traceback,
                                    const TaskInfo& task) {
    PromptBundle bundle;
    bundle.kind = ActionKind::repair;
    bundle.system_text = prompt_template("system");
    const std::string env = environment_block(task, bundle.placeholders_resolved);
    const std::string body = render_template(prompt_template("repair"),
                                             {{"design_idea", candidate.design_thought},
                                              {"reward_function", candidate.source_text},
                                              {"traceback", std::string(traceback)}},
                                             &bundle.placeholders_resolved);
    bundle.user_text = join_blocks({env, body, prompt_template("init"), prompt_template("code_format_tip")});
    bundle.context.push_back(to_context(candidate));
    return bundle;
}

namespace {

PromptBundle single_candidate_prompt(ActionKind kind, const CandidateProgram& candidate, const TaskInfo& task) {
    PromptBundle bundle;
    bundle.kind = kind;
    bundle.system_text = prompt_template("system");
    const std::string env = environment_block(task, bundle.placeholders_resolved);
    const std::string body =
        render_template(prompt_template(template_name(kind)),
                        {{"design_idea", candidate.design_thought}, {"reward_function", candidate.source_text}},
                        &bundle.placeholders_resolved);
    bundle.user_text = join_blocks({env, body});
    bundle.context.push_back(to_context(candidate));
    return bundle;
}

}  // namespace

PromptBundle assemble_align_prompt(const CandidateProgram& candidate, const TaskInfo& task) {
    return single_candidate_prompt(ActionKind::align, candidate, task);
}

PromptBundle assemble_verify_prompt(const CandidateProgram& candidate, const TaskInfo& task) {
    return single_candidate_prompt(ActionKind::verify, candidate, task);
}

}  // namespace rfsearch
