#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "rfsearch/actions.hpp"
#include "rfsearch/designer.hpp"
#include "rfsearch/evaluation.hpp"
#include "rfsearch/prompts.hpp"
#include "rfsearch/search_tree.hpp"

namespace rfsearch {

struct Ablations {
    bool self_verify = true;
    bool thought_align = true;
    ActionMode action_mode;
    bool operator==(const Ablations&) const = default;
};

struct EarlyStop {
    std::optional<double> target_score;
    /// Consecutive expansions without a new best before stopping.
    std::optional<int> patience;
    bool operator==(const EarlyStop&) const = default;
};

struct DesignerSettings {
    std::string backend = "mock";  // mock | http
    MockDesignerConfig mock;
    HttpDesignerConfig http;
};

struct EvaluatorSettings {
    std::string backend = "synthetic";  // synthetic | toy | subprocess
    LandscapeConfig landscape;
    ToyTaskConfig toy;
    SubprocessConfig subprocess;
};

struct SearchConfig {
    int budget = 64;
    int init_count = 8;
    double lambda0 = 0.4;
    double eta = 0.7;
    ActionCounts action_counts{2, 2, 2, 1, 1};
    KRange k_range;
    int parallelism = 8;
    std::size_t elite_capacity = 8;
    int retry_limit = 3;
    std::uint64_t seed = 0;
    SelectionPolicy selection_policy = SelectionPolicy::uct;
    Ablations ablations;
    EarlyStop early_stop;
    TaskInfo task;
    DesignerSettings designer;
    EvaluatorSettings evaluator;

    /// Throws ConfigError on a broken invariant.
    void validate() const;
};

/// Missing keys keep their defaults; unknown top-level keys are rejected.
/// Relative paths (mock script, subprocess work_dir) resolve against
/// `base_dir`. Throws ConfigError.
SearchConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const SearchConfig& config);

/// Throws ConfigError naming the path when it cannot be read or parsed.
SearchConfig load_config(const std::filesystem::path& path);

std::shared_ptr<DesignerBackend> make_designer_backend(const SearchConfig& config);
std::shared_ptr<Evaluator> make_evaluator(const SearchConfig& config);

}  // namespace rfsearch
