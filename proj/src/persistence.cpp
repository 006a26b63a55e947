#include "rfsearch/persistence.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "rfsearch/config.hpp"
#include "rfsearch/errors.hpp"
#include "rfsearch/hash.hpp"
#include "rfsearch/orchestrator.hpp"

namespace rfsearch {

using nlohmann::json;

namespace {

json series_to_json(const SeriesSummary& s) {
    return {{"values", s.values}, {"max", s.max}, {"mean", s.mean}, {"min", s.min}};
}

SeriesSummary series_from_json(const json& j) {
    SeriesSummary s;
    s.values = j.at("values").get<std::vector<double>>();
    s.max = j.at("max").get<double>();
    s.mean = j.at("mean").get<double>();
    s.min = j.at("min").get<double>();
    return s;
}

template <typename T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<T>();
}

ActionKind kind_from(const json& j) {
    auto k = action_kind_from_string(j.get<std::string>());
    if (!k) throw CorruptCheckpoint(fmt::format("unknown action kind '{}'", j.get<std::string>()));
    return *k;
}

json node_to_json(const NodeState& n) {
    json j;
    j["id"] = n.id.value;
    j["parent"] = n.parent ? json(n.parent->value) : json(nullptr);
    std::vector<std::uint32_t> children;
    for (auto c : n.children) children.push_back(c.value);
    j["children"] = children;
    j["depth"] = n.depth;
    j["candidate"] = {
        {"source_text", n.candidate.source_text},
        {"design_thought", n.candidate.design_thought},
        {"lineage_kind", std::string(to_string(n.candidate.lineage_kind))},
        {"lineage_parent", n.candidate.lineage_parent ? json(n.candidate.lineage_parent->value) : json(nullptr)},
        {"revision", n.candidate.revision},
    };
    j["score"] = optional_json(n.score);
    j["feedback"] = n.feedback ? feedback_to_json(*n.feedback) : json(nullptr);
    j["q_value"] = n.q_value;
    j["visit_count"] = n.visit_count;
    j["self_verify"] = n.self_verify;
    j["status"] = std::string(to_string(n.status));
    j["action_tag"] = std::string(to_string(n.action_tag));
    j["traceback"] = n.traceback;
    return j;
}

NodeState node_from_json(const json& j) {
    NodeState n;
    n.id = NodeId{j.at("id").get<std::uint32_t>()};
    if (!j.at("parent").is_null()) n.parent = NodeId{j.at("parent").get<std::uint32_t>()};
    for (auto c : j.at("children").get<std::vector<std::uint32_t>>()) n.children.push_back(NodeId{c});
    n.depth = j.at("depth").get<int>();
    const auto& c = j.at("candidate");
    n.candidate.source_text = c.at("source_text").get<std::string>();
    n.candidate.design_thought = c.at("design_thought").get<std::string>();
    n.candidate.lineage_kind = kind_from(c.at("lineage_kind"));
    if (!c.at("lineage_parent").is_null()) n.candidate.lineage_parent = NodeId{c.at("lineage_parent").get<std::uint32_t>()};
    n.candidate.revision = c.at("revision").get<int>();
    n.score = optional_from<double>(j.at("score"));
    if (!j.at("feedback").is_null()) n.feedback = feedback_from_json(j.at("feedback"));
    n.q_value = j.at("q_value").get<double>();
    n.visit_count = j.at("visit_count").get<int>();
    n.self_verify = j.at("self_verify").get<double>();
    auto status = node_status_from_string(j.at("status").get<std::string>());
    if (!status) throw CorruptCheckpoint("unknown node status");
    n.status = *status;
    n.action_tag = kind_from(j.at("action_tag"));
    n.traceback = j.at("traceback").get<std::string>();
    return n;
}

json trace_to_json(const RunTrace& trace) {
    json entries = json::array();
    for (const auto& e : trace.entries) {
        entries.push_back({{"t", e.t},
                           {"node", e.node.value},
                           {"kind", std::string(to_string(e.kind))},
                           {"score", optional_json(e.score)},
                           {"lambda", e.lambda},
                           {"selection_t", e.selection_t},
                           {"selected", e.selected.value},
                           {"best_so_far", optional_json(e.best_so_far)}});
    }
    return {{"entries", entries}, {"phase_seconds", trace.phase_seconds}};
}

RunTrace trace_from_json(const json& j) {
    RunTrace trace;
    for (const auto& e : j.at("entries")) {
        TraceEntry entry;
        entry.t = e.at("t").get<int>();
        entry.node = NodeId{e.at("node").get<std::uint32_t>()};
        entry.kind = kind_from(e.at("kind"));
        entry.score = optional_from<double>(e.at("score"));
        entry.lambda = e.at("lambda").get<double>();
        entry.selection_t = e.at("selection_t").get<int>();
        entry.selected = NodeId{e.at("selected").get<std::uint32_t>()};
        entry.best_so_far = optional_from<double>(e.at("best_so_far"));
        trace.entries.push_back(entry);
    }
    trace.phase_seconds = j.at("phase_seconds").get<std::map<std::string, double>>();
    return trace;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out << text;
    if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

std::string optional_cell(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : ""; }

}  // namespace

json feedback_to_json(const TrainingFeedback& f) {
    json components = json::array();
    for (const auto& [name, s] : f.components) components.push_back({{"name", name}, {"series", series_to_json(s)}});
    return {{"components", components},
            {"task_score", series_to_json(f.task_score)},
            {"episode_lengths", series_to_json(f.episode_lengths)},
            {"epoch_freq", f.epoch_freq},
            {"final_score", f.final_score}};
}

TrainingFeedback feedback_from_json(const json& j) {
    TrainingFeedback f;
    for (const auto& c : j.at("components"))
        f.components.emplace_back(c.at("name").get<std::string>(), series_from_json(c.at("series")));
    f.task_score = series_from_json(j.at("task_score"));
    f.episode_lengths = series_from_json(j.at("episode_lengths"));
    f.epoch_freq = j.at("epoch_freq").get<int>();
    f.final_score = j.at("final_score").get<double>();
    return f;
}

json tree_to_json(const SearchTree& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes()) nodes.push_back(node_to_json(n));
    return nodes;
}

SearchTree tree_from_json(const json& doc) {
    std::vector<NodeState> nodes;
    for (const auto& n : doc) nodes.push_back(node_from_json(n));
    try {
        return SearchTree::from_nodes(std::move(nodes));
    } catch (const CorruptCheckpoint&) {
        throw;
    } catch (const Error& e) {
        throw CorruptCheckpoint(fmt::format("inconsistent tree: {}", e.what()));
    }
}

json state_to_json(const SearchState& s) {
    json elite = json::array();
    for (const auto& e : s.elite.entries()) elite.push_back({{"id", e.id.value}, {"score", e.score}});
    const auto& rs = s.rng.state();
    // RNG words as strings: JSON numbers cannot carry 64 bits everywhere.
    json rng = json::array();
    for (auto w : rs) rng.push_back(fmt::format("{:016x}", w));
    return {{"config", config_to_json(s.config)},
            {"nodes", tree_to_json(s.tree)},
            {"elite", {{"capacity", s.elite.capacity()}, {"entries", elite}}},
            {"rng", rng},
            {"t", s.t},
            {"initialized", s.initialized},
            {"stopped_early", s.stopped_early},
            {"stale_expansions", s.stale_expansions},
            {"trace", trace_to_json(s.trace)}};
}

SearchState state_from_json(const json& j) {
    SearchState s(config_from_json(j.at("config")));
    s.tree = tree_from_json(j.at("nodes"));
    std::vector<EliteEntry> entries;
    for (const auto& e : j.at("elite").at("entries"))
        entries.push_back({NodeId{e.at("id").get<std::uint32_t>()}, e.at("score").get<double>()});
    s.elite = EliteSet::from_entries(j.at("elite").at("capacity").get<std::size_t>(), std::move(entries));
    Rng::State rs{};
    const auto words = j.at("rng").get<std::vector<std::string>>();
    if (words.size() != rs.size()) throw CorruptCheckpoint("rng state must have 4 words");
    for (std::size_t i = 0; i < rs.size(); ++i) rs[i] = std::stoull(words[i], nullptr, 16);
    s.rng.set_state(rs);
    s.t = j.at("t").get<int>();
    s.initialized = j.at("initialized").get<bool>();
    s.stopped_early = j.at("stopped_early").get<bool>();
    s.stale_expansions = j.at("stale_expansions").get<int>();
    s.trace = trace_from_json(j.at("trace"));
    return s;
}

std::string checkpoint_document(const SearchState& state) {
    const json payload = state_to_json(state);
    json doc;
    doc["schema_version"] = kCheckpointSchemaVersion;
    doc["content_hash"] = sha256_hex(payload.dump());
    doc["payload"] = payload;
    return doc.dump(1);
}

SearchState parse_checkpoint_document(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw CorruptCheckpoint(fmt::format("checkpoint is not valid JSON: {}", e.what()));
    }
    if (!doc.is_object() || !doc.contains("schema_version") || !doc.contains("payload") ||
        !doc.contains("content_hash"))
        throw CorruptCheckpoint("checkpoint lacks schema_version, content_hash or payload");
    if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != kCheckpointSchemaVersion)
        throw VersionMismatch(
            fmt::format("checkpoint schema version {} is not supported (expected {})", doc["schema_version"].dump(),
                        kCheckpointSchemaVersion));
    if (sha256_hex(doc["payload"].dump()) != doc["content_hash"])
        throw CorruptCheckpoint("checkpoint content hash does not match its payload");
    try {
        return state_from_json(doc["payload"]);
    } catch (const json::exception& e) {
        throw CorruptCheckpoint(fmt::format("malformed checkpoint payload: {}", e.what()));
    } catch (const ConfigError& e) {
        throw CorruptCheckpoint(fmt::format("checkpoint config is invalid: {}", e.what()));
    }
}

void save_checkpoint(const SearchState& state, const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    const std::filesystem::path tmp = path.string() + ".tmp";
    write_file(tmp, checkpoint_document(state));
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError(fmt::format("cannot move checkpoint into '{}': {}", path.string(), ec.message()));
}

SearchState load_checkpoint(const std::filesystem::path& path) {
    return parse_checkpoint_document(read_file(path));
}

void write_run_directory(const SearchState& state, const std::filesystem::path& out) {
    std::error_code ec;
    std::filesystem::create_directories(out / "nodes", ec);
    if (ec) throw IoError(fmt::format("cannot create '{}': {}", (out / "nodes").string(), ec.message()));
    for (const auto& n : state.tree.nodes()) {
        if (state.tree.is_root(n.id)) continue;
        const auto dir = out / "nodes" / std::to_string(n.id.value);
        std::filesystem::create_directories(dir, ec);
        write_file(dir / "candidate.rfn", n.candidate.source_text + "\n");
        if (n.feedback)
            write_file(dir / "feedback.txt", format_feedback(*n.feedback) + "\n");
        else
            write_file(dir / "feedback.txt", n.traceback + "\n");
    }
    write_file(out / "trace.csv", trace_csv(state.trace));
    if (state.tree.best_node()) write_file(out / "report.txt", report_text(state));
    save_checkpoint(state, out / "checkpoint.ckpt");
}

std::string report_text(const SearchState& state) {
    const auto best = state.tree.best_node();
    if (!best) return "no evaluated node\n";
    std::vector<NodeId> path;
    for (std::optional<NodeId> cur = *best; cur && !state.tree.is_root(*cur); cur = state.tree.node(*cur).parent)
        path.push_back(*cur);
    std::reverse(path.begin(), path.end());

    std::string out = fmt::format("best node {} score {:.4f} after {} samples\n", best->value,
                                  *state.tree.node(*best).score, state.t);
    for (std::size_t i = 0; i < path.size(); ++i) {
        const auto& n = state.tree.node(path[i]);
        out += fmt::format("\n[{}] node {} action {} score {:.4f} revision {}\n", i + 1, n.id.value,
                           short_name(n.action_tag), n.score.value_or(0.0), n.candidate.revision);
        out += fmt::format("thought: {}\n", n.candidate.design_thought);
        out += fmt::format("candidate:\n{}\n", n.candidate.source_text);
    }
    return out;
}

std::string report_csv(const RunTrace& trace) {
    std::string out = "t,best_so_far\n";
    for (const auto& e : trace.entries) out += fmt::format("{},{}\n", e.t, optional_cell(e.best_so_far));
    return out;
}

std::string trace_csv(const RunTrace& trace) {
    std::string out = "t,node,kind,score,lambda,selection_t,selected,best_so_far\n";
    for (const auto& e : trace.entries)
        out += fmt::format("{},{},{},{},{},{},{},{}\n", e.t, e.node.value, short_name(e.kind), optional_cell(e.score),
                           e.lambda, e.selection_t, e.selected.value, optional_cell(e.best_so_far));
    return out;
}

}  // namespace rfsearch
