#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <vector>

#include <json.hpp>

#include "ant_feedback.hpp"
#include "helpers.hpp"
#include "rfsearch/cli.hpp"
#include "rfsearch/orchestrator.hpp"
#include "rfsearch/persistence.hpp"

using namespace rfsearch;
namespace fs = std::filesystem;

namespace {

int cli(std::initializer_list<std::string> args) {
    std::vector<std::string> owned{"rfsearch"};
    owned.insert(owned.end(), args);
    std::vector<const char*> argv;
    for (const auto& a : owned) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path write_config(const fs::path& dir, int budget) {
    const auto path = dir / "config.json";
    nlohmann::json doc = {{"budget", budget},
                          {"seed", 4},
                          {"designer", {{"error_rate", 0.1}}},
                          {"evaluator", {{"backend", "synthetic"}, {"dimension", 4}}}};
    std::ofstream(path) << doc.dump(2);
    return path;
}

}  // namespace

TEST_CASE("run, resume, inspect and export-best") {
    const auto dir = testutil::scratch("cli_run");
    const auto config = write_config(dir, 32);

    CHECK(cli({"run", "--config", config.string(), "--out", (dir / "full").string()}) == 0);
    CHECK(cli({"run", "--config", config.string(), "--out", (dir / "part").string(), "--stop-after", "16"}) == 0);
    const auto part_ckpt = dir / "part" / "checkpoint.ckpt";
    CHECK(load_checkpoint(part_ckpt).t == 16);
    CHECK(cli({"resume", "--checkpoint", part_ckpt.string()}) == 0);

    const auto full = load_checkpoint(dir / "full" / "checkpoint.ckpt");
    const auto resumed = load_checkpoint(part_ckpt);
    CHECK(full.t == 32);
    CHECK(run_fingerprint(resumed) == run_fingerprint(full));

    CHECK(cli({"inspect", "--checkpoint", part_ckpt.string()}) == 0);
    CHECK(cli({"inspect", "--checkpoint", part_ckpt.string(), "--format", "csv"}) == 0);
    CHECK(cli({"inspect", "--checkpoint", part_ckpt.string(), "--format", "xml"}) == 1);

    const auto best_path = dir / "best.rfn";
    CHECK(cli({"export-best", "--checkpoint", part_ckpt.string(), "--out", best_path.string()}) == 0);
    CHECK(testutil::read_text(best_path.string()) ==
          full.tree.node(*full.tree.best_node()).candidate.source_text + "\n");
}

TEST_CASE("bench writes median and per-seed csv") {
    const auto dir = testutil::scratch("cli_bench");
    const auto config = write_config(dir, 24);
    const auto out = dir / "bench.csv";
    CHECK(cli({"bench", "--config", config.string(), "--methods", "mcts,mcts.dfs.basic,greedy", "--seeds", "2", "--out",
               out.string()}) == 0);
    const std::string csv = testutil::read_text(out.string());
    CHECK(csv.rfind("t,mcts,mcts.dfs.basic,greedy\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 25);
    const std::string finals = testutil::read_text((dir / "bench.final.csv").string());
    CHECK(finals.rfind("method,seed,best\n", 0) == 0);
    CHECK(std::count(finals.begin(), finals.end(), '\n') == 7);
}

TEST_CASE("exit codes") {
    const auto dir = testutil::scratch("cli_errors");
    CHECK(cli({}) == 1);
    CHECK(cli({"fly"}) == 1);
    CHECK(cli({"run"}) == 1);
    CHECK(cli({"run", "--config", (dir / "missing.json").string()}) == 1);
    std::ofstream(dir / "bad.json") << R"({"budget": -3})";
    CHECK(cli({"run", "--config", (dir / "bad.json").string()}) == 1);
    CHECK(cli({"bench", "--config", write_config(dir, 16).string(), "--methods", "annealing"}) == 1);
    std::ofstream(dir / "junk.ckpt") << "{}";
    CHECK(cli({"inspect", "--checkpoint", (dir / "junk.ckpt").string()}) == 2);
    CHECK(cli({"resume", "--checkpoint", (dir / "nothing.ckpt").string()}) == 2);
}
