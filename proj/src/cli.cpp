#include "rfsearch/cli.hpp"

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rfsearch/bench.hpp"
#include "rfsearch/config.hpp"
#include "rfsearch/errors.hpp"
#include "rfsearch/orchestrator.hpp"
#include "rfsearch/persistence.hpp"

namespace rfsearch {

namespace {

namespace fs = std::filesystem;

void continue_search(Search& search, const fs::path& out, std::optional<int> stop_after) {
    search.on_step = [&](const SearchState& state) { save_checkpoint(state, out / "checkpoint.ckpt"); };
    search.run(stop_after);
    write_run_directory(search.state(), out);
    const auto& s = search.state();
    if (auto best = search.best()) {
        fmt::print("t={} best node {} score {:.4f}{}\n", s.t, best->value, *s.tree.node(*best).score,
                   s.stopped_early ? " (stopped early)" : "");
    }
    fmt::print("run directory: {}\n", out.string());
}

int cmd_run(const std::string& config_path, const std::string& out, std::optional<int> stop_after) {
    const SearchConfig config = load_config(config_path);
    Search search(config, make_designer_backend(config), make_evaluator(config));
    continue_search(search, out, stop_after);
    return 0;
}

int cmd_resume(const std::string& checkpoint, std::string out, std::optional<int> stop_after) {
    SearchState state = load_checkpoint(checkpoint);
    if (out.empty()) out = fs::path(checkpoint).parent_path().string();
    if (out.empty()) out = ".";
    const SearchConfig config = state.config;
    Search search(std::move(state), make_designer_backend(config), make_evaluator(config));
    continue_search(search, out, stop_after);
    return 0;
}

int cmd_inspect(const std::string& checkpoint, const std::string& format) {
    const SearchState state = load_checkpoint(checkpoint);
    std::cout << (format == "csv" ? report_csv(state.trace) : report_text(state));
    return 0;
}

int cmd_bench(const std::string& config_path, const std::string& methods, int seeds, const std::string& out) {
    const SearchConfig config = load_config(config_path);
    const auto parsed = parse_methods(methods);
    const BenchResult result = run_bench(config, parsed, seeds);
    const std::string csv = bench_csv(result);
    if (out.empty()) {
        std::cout << csv;
    } else {
        std::ofstream(out) << csv;
        const fs::path finals = fs::path(out).replace_extension(".final.csv");
        std::ofstream(finals) << bench_final_csv(result);
        fmt::print("wrote {} and {}\n", out, finals.string());
    }
    return 0;
}

int cmd_export_best(const std::string& checkpoint, const std::string& out) {
    const SearchState state = load_checkpoint(checkpoint);
    const auto best = state.tree.best_node();
    if (!best) throw Error("checkpoint holds no evaluated node");
    std::ofstream file(out);
    if (!file) throw IoError(fmt::format("cannot write '{}'", out));
    file << state.tree.node(*best).candidate.source_text << "\n";
    fmt::print("node {} score {:.4f} -> {}\n", best->value, *state.tree.node(*best).score, out);
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Tree search over reward programs with a language-model designer"};
    app.require_subcommand(1);

    std::string config_path, run_out, resume_out, bench_out, export_out, checkpoint, format = "text", methods = "mcts,greedy,evolution";
    int seeds = 5;
    std::optional<int> stop_after;

    auto* run = app.add_subcommand("run", "start a search from a config file");
    run->add_option("--config", config_path, "config JSON")->required();
    run->add_option("--out", run_out, "run directory")->default_val("rfsearch_run");
    run->add_option("--stop-after", stop_after, "stop once this many samples exist");

    auto* resume = app.add_subcommand("resume", "continue a search from a checkpoint");
    resume->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    resume->add_option("--out", resume_out, "run directory (default: the checkpoint's directory)");
    resume->add_option("--stop-after", stop_after, "stop once this many samples exist");

    auto* inspect = app.add_subcommand("inspect", "print the best path or the score curve");
    inspect->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    inspect->add_option("--format", format, "text or csv")->check(CLI::IsMember({"text", "csv"}));

    auto* bench = app.add_subcommand("bench", "compare methods over several seeds");
    bench->add_option("--config", config_path, "config JSON")->required();
    bench->add_option("--methods", methods, "comma-separated methods, e.g. mcts,mcts.dfs,greedy");
    bench->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);
    bench->add_option("--out", bench_out, "write the median csv here instead of stdout");

    auto* export_best = app.add_subcommand("export-best", "write the best candidate program");
    export_best->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    export_best->add_option("--out", export_out, "output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*run) return cmd_run(config_path, run_out, stop_after);
        if (*resume) return cmd_resume(checkpoint, resume_out, stop_after);
        if (*inspect) return cmd_inspect(checkpoint, format);
        if (*bench) return cmd_bench(config_path, methods, seeds, bench_out);
        if (*export_best) return cmd_export_best(checkpoint, export_out);
    } catch (const ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    }
    return 1;
}

}  // namespace rfsearch
