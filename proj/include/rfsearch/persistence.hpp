#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rfsearch/elite_set.hpp"
#include "rfsearch/feedback.hpp"
#include "rfsearch/search_tree.hpp"

namespace rfsearch {

struct SearchState;
struct RunTrace;

inline constexpr int kCheckpointSchemaVersion = 1;

nlohmann::json feedback_to_json(const TrainingFeedback& feedback);
TrainingFeedback feedback_from_json(const nlohmann::json& doc);

nlohmann::json tree_to_json(const SearchTree& tree);
SearchTree tree_from_json(const nlohmann::json& doc);

nlohmann::json state_to_json(const SearchState& state);
SearchState state_from_json(const nlohmann::json& doc);

/// {schema_version, content_hash, payload}; the hash is SHA-256 of the
/// payload's compact dump.
std::string checkpoint_document(const SearchState& state);
SearchState parse_checkpoint_document(const std::string& text);

/// Writes atomically (temp file + rename). Throws IoError.
void save_checkpoint(const SearchState& state, const std::filesystem::path& path);
/// Throws IoError, VersionMismatch, CorruptCheckpoint.
SearchState load_checkpoint(const std::filesystem::path& path);

/// Writes <out>/nodes/<id>/{candidate.rfn,feedback.txt}, <out>/trace.csv,
/// <out>/report.txt and <out>/checkpoint.ckpt.
void write_run_directory(const SearchState& state, const std::filesystem::path& out);

/// Root-to-best path, one block per node with its action, score and thought.
std::string report_text(const SearchState& state);
/// `t,best_so_far` rows, one per trace entry.
std::string report_csv(const RunTrace& trace);
/// `t,node,kind,score,lambda,selection_t,selected,best_so_far` rows.
std::string trace_csv(const RunTrace& trace);

}  // namespace rfsearch
