#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "rfsearch/errors.hpp"
#include "rfsearch/evaluation.hpp"

extern char** environ;

namespace rfsearch {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SeriesSummary series_from_json(const nlohmann::ordered_json& j, const std::string& name) {
    if (!j.is_array()) throw ParseError(fmt::format("'{}' must be an array", name));
    std::vector<double> values;
    for (const auto& v : j) {
        if (!v.is_number()) throw ParseError(fmt::format("'{}' must contain numbers", name));
        values.push_back(v.get<double>());
    }
    if (values.size() != kSnapshotCount)
        throw ParseError(fmt::format("'{}' has {} entries, expected {}", name, values.size(), kSnapshotCount));
    return SeriesSummary::from_values(std::move(values));
}

struct ChildResult {
    bool timed_out = false;
    int exit_code = -1;
};

ChildResult run_child(const std::vector<std::string>& argv, const fs::path& run_dir,
                      std::chrono::milliseconds timeout) {
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);

    const std::string out_path = (run_dir / "stdout.txt").string();
    const std::string err_path = (run_dir / "stderr.txt").string();

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);

    pid_t pid = 0;
    const int rc = posix_spawnp(&pid, args[0], &actions, &attr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
    if (rc != 0) throw Error(fmt::format("failed to spawn '{}': {}", argv[0], std::strerror(rc)));

    const auto deadline = std::chrono::steady_clock::now() + timeout;
    ChildResult result;
    for (;;) {
        int status = 0;
        const pid_t done = waitpid(pid, &status, WNOHANG);
        if (done == pid) {
            if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
            else if (WIFSIGNALED(status)) result.exit_code = 128 + WTERMSIG(status);
            return result;
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(-pid, SIGKILL);
            waitpid(pid, &status, 0);
            result.timed_out = true;
            return result;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
}

}  // namespace

EvalOutcome parse_trainer_response(const std::string& json_text) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt::format("response is not valid JSON: {}", e.what()));
    }
    if (!doc.is_object() || !doc.contains("status") || !doc["status"].is_string())
        throw ParseError("response lacks a 'status' string");
    const std::string status = doc["status"].get<std::string>();
    if (status == "error") {
        std::string tb = doc.contains("traceback") && doc["traceback"].is_string()
                             ? doc["traceback"].get<std::string>()
                             : std::string("trainer reported an error without a traceback");
        return EvalOutcome::failure(std::move(tb));
    }
    if (status != "ok") throw ParseError(fmt::format("unknown status '{}'", status));

    TrainingFeedback fb;
    if (!doc.contains("final_score") || !doc["final_score"].is_number())
        throw ParseError("response lacks a numeric 'final_score'");
    fb.final_score = doc["final_score"].get<double>();
    if (!doc.contains("component_series") || !doc["component_series"].is_object())
        throw ParseError("response lacks a 'component_series' object");
    for (const auto& [name, series] : doc["component_series"].items())
        fb.components.emplace_back(name, series_from_json(series, name));
    if (!doc.contains("task_score_series")) throw ParseError("response lacks 'task_score_series'");
    fb.task_score = series_from_json(doc["task_score_series"], "task_score_series");
    if (!doc.contains("episode_lengths_series")) throw ParseError("response lacks 'episode_lengths_series'");
    fb.episode_lengths = series_from_json(doc["episode_lengths_series"], "episode_lengths_series");
    return EvalOutcome::success(std::move(fb));
}

EvalOutcome subprocess_evaluate(const CandidateProgram& candidate, const SubprocessConfig& config,
                                const fs::path& run_dir, std::uint64_t seed) {
    if (config.command.empty()) return EvalOutcome::failure("no trainer command configured");
    std::error_code ec;
    fs::create_directories(run_dir, ec);
    if (ec) return EvalOutcome::failure(fmt::format("cannot create run directory {}: {}", run_dir.string(), ec.message()));
    const fs::path abs_dir = fs::absolute(run_dir);
    const fs::path candidate_path = abs_dir / ("candidate" + config.extension);
    const fs::path request_path = abs_dir / "request.json";
    const fs::path response_path = abs_dir / "response.json";
    fs::remove(response_path, ec);

    {
        std::ofstream out(candidate_path, std::ios::binary);
        out << candidate.source_text;
    }
    {
        nlohmann::ordered_json request = {
            {"candidate_path", candidate_path.string()},
            {"seed", seed},
            {"train_steps", config.train_steps},
            {"run_dir", abs_dir.string()},
        };
        std::ofstream out(request_path, std::ios::binary);
        out << request.dump(2) << "\n";
    }

    std::vector<std::string> argv = config.command;
    argv.push_back(request_path.string());
    ChildResult child;
    try {
        child = run_child(argv, abs_dir, config.timeout);
    } catch (const Error& e) {
        return EvalOutcome::failure(e.what());
    }
    const std::string stderr_text = read_file(abs_dir / "stderr.txt");
    if (child.timed_out) {
        const double secs = static_cast<double>(config.timeout.count()) / 1000.0;
        std::string tb = fmt::format("timeout after {} s", secs);
        if (!stderr_text.empty()) tb += "\n" + stderr_text;
        return EvalOutcome::failure(std::move(tb));
    }
    if (child.exit_code != 0) {
        if (!stderr_text.empty()) return EvalOutcome::failure(stderr_text);
        return EvalOutcome::failure(fmt::format("trainer exited with status {}", child.exit_code));
    }
    if (!fs::exists(response_path)) return EvalOutcome::failure("malformed response: response.json was not written");
    try {
        return parse_trainer_response(read_file(response_path));
    } catch (const ParseError& e) {
        return EvalOutcome::failure(fmt::format("malformed response: {}", e.what()));
    }
}

SubprocessEvaluator::SubprocessEvaluator(SubprocessConfig config) : config_(std::move(config)) {}

int SubprocessEvaluator::epoch_freq() const {
    return std::max(1, config_.train_steps / static_cast<int>(kSnapshotCount));
}

EvalOutcome SubprocessEvaluator::evaluate(const CandidateProgram& candidate, const EvalRequest& request) {
    const fs::path dir = config_.work_dir / "eval" / fmt::format("{}", request.node.value) /
                         fmt::format("attempt_{}", request.attempt);
    auto outcome = subprocess_evaluate(candidate, config_, dir, request.seed);
    if (outcome.ok() && outcome.feedback) outcome.feedback->epoch_freq = epoch_freq();
    return outcome;
}

}  // namespace rfsearch
