#include "rfsearch/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "rfsearch/errors.hpp"

namespace rfsearch {

using nlohmann::json;

void SearchConfig::validate() const {
    if (init_count < 1) throw ConfigError("init_count must be at least 1");
    if (budget < init_count) throw ConfigError("budget must be at least init_count");
    if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in (0, 1]");
    if (!(lambda0 >= 0.0)) throw ConfigError("lambda0 must be non-negative");
    if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
    int total = 0;
    for (int c : action_counts) {
        if (c < 0) throw ConfigError("action_counts must be non-negative");
        total += c;
    }
    if (total < 1) throw ConfigError("action_counts must sum to at least 1");
    if (k_range.min < 1 || k_range.max < k_range.min) throw ConfigError("k_range must satisfy 1 <= min <= max");
    if (elite_capacity < 1) throw ConfigError("elite_capacity must be at least 1");
    if (retry_limit < 0) throw ConfigError("retry_limit must be non-negative");
    if (designer.backend != "mock" && designer.backend != "http")
        throw ConfigError(fmt::format("unknown designer backend '{}'", designer.backend));
    if (evaluator.backend != "synthetic" && evaluator.backend != "toy" && evaluator.backend != "subprocess")
        throw ConfigError(fmt::format("unknown evaluator backend '{}'", evaluator.backend));
    if (evaluator.backend == "subprocess" && evaluator.subprocess.command.empty())
        throw ConfigError("subprocess evaluator needs a command");
    if (early_stop.patience && *early_stop.patience < 1) throw ConfigError("early_stop.patience must be at least 1");
}

namespace {

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (auto it = obj.find(key); it != obj.end() && !it->is_null()) out = it->get<T>();
}

void check_keys(const json& obj, const char* where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(fmt::format("'{}' must be an object", where));
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items())
        if (!keys.count(k)) throw ConfigError(fmt::format("unknown key '{}' in {}", k, where));
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
    return p.is_relative() && !base.empty() ? base / p : p;
}

std::vector<std::string> split_command(const json& value) {
    if (value.is_array()) return value.get<std::vector<std::string>>();
    std::vector<std::string> out;
    std::istringstream in(value.get<std::string>());
    std::string word;
    while (in >> word) out.push_back(word);
    return out;
}

ActionMode parse_action_mode(const json& value) {
    if (value.is_string()) return ActionMode::parse(value.get<std::string>());
    std::string joined;
    for (const auto& item : value) {
        if (!joined.empty()) joined += ',';
        joined += item.get<std::string>();
    }
    return ActionMode::parse("subset:" + joined);
}

}  // namespace

SearchConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
    SearchConfig c;
    try {
        check_keys(doc, "config",
                   {"budget", "init_count", "lambda0", "eta", "action_counts", "k_range", "parallelism",
                    "elite_capacity", "retry_limit", "seed", "selection_policy", "ablations", "early_stop", "task",
                    "designer", "evaluator"});
        read(doc, "budget", c.budget);
        read(doc, "init_count", c.init_count);
        read(doc, "lambda0", c.lambda0);
        read(doc, "eta", c.eta);
        if (doc.contains("action_counts")) {
            const auto counts = doc["action_counts"].get<std::vector<int>>();
            if (counts.size() != 5) throw ConfigError("action_counts needs exactly 5 entries (m1, m2, c3, r4, d5)");
            std::copy(counts.begin(), counts.end(), c.action_counts.begin());
        }
        if (doc.contains("k_range")) {
            const auto k = doc["k_range"].get<std::vector<int>>();
            if (k.size() != 2) throw ConfigError("k_range needs exactly 2 entries");
            c.k_range = {k[0], k[1]};
        }
        read(doc, "parallelism", c.parallelism);
        read(doc, "elite_capacity", c.elite_capacity);
        read(doc, "retry_limit", c.retry_limit);
        read(doc, "seed", c.seed);
        if (doc.contains("selection_policy")) {
            const auto text = doc["selection_policy"].get<std::string>();
            auto policy = selection_policy_from_string(text);
            if (!policy) throw ConfigError(fmt::format("unknown selection_policy '{}'", text));
            c.selection_policy = *policy;
        }
        if (doc.contains("ablations")) {
            const auto& a = doc["ablations"];
            check_keys(a, "ablations", {"self_verify", "thought_align", "action_mode"});
            read(a, "self_verify", c.ablations.self_verify);
            read(a, "thought_align", c.ablations.thought_align);
            if (a.contains("action_mode")) c.ablations.action_mode = parse_action_mode(a["action_mode"]);
        }
        if (doc.contains("early_stop")) {
            const auto& e = doc["early_stop"];
            check_keys(e, "early_stop", {"target_score", "patience"});
            if (e.contains("target_score") && !e["target_score"].is_null())
                c.early_stop.target_score = e["target_score"].get<double>();
            if (e.contains("patience") && !e["patience"].is_null()) c.early_stop.patience = e["patience"].get<int>();
        }
        if (doc.contains("task")) {
            const auto& t = doc["task"];
            check_keys(t, "task", {"description", "environment"});
            read(t, "description", c.task.description);
            read(t, "environment", c.task.environment);
        }
        if (doc.contains("designer")) {
            const auto& d = doc["designer"];
            check_keys(d, "designer",
                       {"backend", "mode", "dimension", "init_range", "error_rate", "script", "endpoint", "path",
                        "model", "temperature", "timeout_s", "transport_retries"});
            read(d, "backend", c.designer.backend);
            if (d.contains("mode")) {
                const auto mode = d["mode"].get<std::string>();
                if (mode == "genome") c.designer.mock.mode = MockDesignerConfig::Mode::genome;
                else if (mode == "dsl") c.designer.mock.mode = MockDesignerConfig::Mode::dsl;
                else throw ConfigError(fmt::format("unknown mock designer mode '{}'", mode));
            }
            read(d, "dimension", c.designer.mock.dimension);
            if (d.contains("init_range")) {
                const auto r = d["init_range"].get<std::vector<double>>();
                if (r.size() != 2) throw ConfigError("designer.init_range needs exactly 2 entries");
                c.designer.mock.init_low = r[0];
                c.designer.mock.init_high = r[1];
            }
            read(d, "error_rate", c.designer.mock.error_rate);
            if (d.contains("script")) c.designer.mock.script = resolve(d["script"].get<std::string>(), base_dir);
            read(d, "endpoint", c.designer.http.endpoint);
            read(d, "path", c.designer.http.path);
            read(d, "model", c.designer.http.model);
            read(d, "temperature", c.designer.http.temperature);
            if (d.contains("timeout_s"))
                c.designer.http.timeout = std::chrono::milliseconds(
                    static_cast<long long>(d["timeout_s"].get<double>() * 1000.0));
            read(d, "transport_retries", c.designer.http.transport_retries);
        }
        if (doc.contains("evaluator")) {
            const auto& e = doc["evaluator"];
            check_keys(e, "evaluator",
                       {"backend", "dimension", "train_steps", "command", "timeout_s", "work_dir", "extension"});
            read(e, "backend", c.evaluator.backend);
            read(e, "dimension", c.evaluator.landscape.dimension);
            read(e, "train_steps", c.evaluator.toy.train_steps);
            c.evaluator.subprocess.train_steps = c.evaluator.toy.train_steps;
            if (e.contains("command")) c.evaluator.subprocess.command = split_command(e["command"]);
            if (e.contains("timeout_s"))
                c.evaluator.subprocess.timeout = std::chrono::milliseconds(
                    static_cast<long long>(e["timeout_s"].get<double>() * 1000.0));
            if (e.contains("work_dir"))
                c.evaluator.subprocess.work_dir = resolve(e["work_dir"].get<std::string>(), base_dir);
            read(e, "extension", c.evaluator.subprocess.extension);
        }
        // The mock follows the evaluator unless told otherwise.
        const json designer = doc.value("designer", json::object());
        if (!designer.contains("dimension")) c.designer.mock.dimension = c.evaluator.landscape.dimension;
        if (!designer.contains("mode"))
            c.designer.mock.mode = c.evaluator.backend == "synthetic" ? MockDesignerConfig::Mode::genome
                                                                      : MockDesignerConfig::Mode::dsl;
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("malformed config: {}", e.what()));
    }
    c.validate();
    return c;
}

json config_to_json(const SearchConfig& c) {
    json doc;
    doc["budget"] = c.budget;
    doc["init_count"] = c.init_count;
    doc["lambda0"] = c.lambda0;
    doc["eta"] = c.eta;
    doc["action_counts"] = std::vector<int>(c.action_counts.begin(), c.action_counts.end());
    doc["k_range"] = {c.k_range.min, c.k_range.max};
    doc["parallelism"] = c.parallelism;
    doc["elite_capacity"] = c.elite_capacity;
    doc["retry_limit"] = c.retry_limit;
    doc["seed"] = c.seed;
    doc["selection_policy"] = std::string(to_string(c.selection_policy));

    json ablations;
    ablations["self_verify"] = c.ablations.self_verify;
    ablations["thought_align"] = c.ablations.thought_align;
    ablations["action_mode"] = c.ablations.action_mode.to_string();
    doc["ablations"] = ablations;

    json early = json::object();
    if (c.early_stop.target_score) early["target_score"] = *c.early_stop.target_score;
    if (c.early_stop.patience) early["patience"] = *c.early_stop.patience;
    doc["early_stop"] = early;

    doc["task"] = {{"description", c.task.description}, {"environment", c.task.environment}};

    json d;
    d["backend"] = c.designer.backend;
    d["mode"] = c.designer.mock.mode == MockDesignerConfig::Mode::genome ? "genome" : "dsl";
    d["dimension"] = c.designer.mock.dimension;
    d["init_range"] = {c.designer.mock.init_low, c.designer.mock.init_high};
    d["error_rate"] = c.designer.mock.error_rate;
    if (c.designer.mock.script) d["script"] = c.designer.mock.script->string();
    d["endpoint"] = c.designer.http.endpoint;
    d["path"] = c.designer.http.path;
    d["model"] = c.designer.http.model;
    d["temperature"] = c.designer.http.temperature;
    d["timeout_s"] = static_cast<double>(c.designer.http.timeout.count()) / 1000.0;
    d["transport_retries"] = c.designer.http.transport_retries;
    doc["designer"] = d;

    json e;
    e["backend"] = c.evaluator.backend;
    e["dimension"] = c.evaluator.landscape.dimension;
    e["train_steps"] = c.evaluator.toy.train_steps;
    e["command"] = c.evaluator.subprocess.command;
    e["timeout_s"] = static_cast<double>(c.evaluator.subprocess.timeout.count()) / 1000.0;
    if (!c.evaluator.subprocess.work_dir.empty()) e["work_dir"] = c.evaluator.subprocess.work_dir.string();
    e["extension"] = c.evaluator.subprocess.extension;
    doc["evaluator"] = e;
    return doc;
}

SearchConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path.string()));
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config file '{}' is not valid JSON: {}", path.string(), e.what()));
    }
    return config_from_json(doc, path.parent_path());
}

std::shared_ptr<DesignerBackend> make_designer_backend(const SearchConfig& config) {
    if (config.designer.backend == "http") return std::make_shared<HttpDesigner>(config.designer.http);
    return std::make_shared<MockDesigner>(config.designer.mock);
}

std::shared_ptr<Evaluator> make_evaluator(const SearchConfig& config) {
    if (config.evaluator.backend == "toy") return std::make_shared<ToyEvaluator>(config.evaluator.toy);
    if (config.evaluator.backend == "subprocess")
        return std::make_shared<SubprocessEvaluator>(config.evaluator.subprocess);
    return std::make_shared<SyntheticEvaluator>(config.evaluator.landscape);
}

}  // namespace rfsearch
