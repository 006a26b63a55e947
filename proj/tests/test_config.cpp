#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "rfsearch/config.hpp"
#include "rfsearch/errors.hpp"

using namespace rfsearch;
using nlohmann::json;

TEST_CASE("config defaults") {
    auto c = config_from_json(json::object());
    CHECK(c.budget == 64);
    CHECK(c.init_count == 8);
    CHECK(c.lambda0 == 0.4);
    CHECK(c.eta == 0.7);
    CHECK(c.action_counts == ActionCounts{2, 2, 2, 1, 1});
    CHECK(c.k_range == KRange{2, 4});
    CHECK(c.parallelism == 8);
    CHECK(c.elite_capacity == 8);
    CHECK(c.selection_policy == SelectionPolicy::uct);
    CHECK(c.ablations.action_mode.kind == ActionMode::Kind::full);
    CHECK_FALSE(c.early_stop.target_score);
    CHECK_FALSE(c.early_stop.patience);
}

TEST_CASE("config round trip through json") {
    auto c = config_from_json(json::parse(R"({
        "budget": 40, "seed": 12, "selection_policy": "bfs", "k_range": [2, 3],
        "ablations": {"self_verify": false, "action_mode": "m1,r4"},
        "early_stop": {"target_score": 0.9, "patience": 3},
        "designer": {"error_rate": 0.2, "init_range": [-1, 1]},
        "evaluator": {"backend": "toy", "train_steps": 100}
    })"));
    CHECK(c.designer.mock.mode == MockDesignerConfig::Mode::dsl);
    CHECK(c.ablations.action_mode.subset ==
          std::vector<ActionKind>{ActionKind::m1_mutation_structure, ActionKind::r4_path_reasoning});
    const json doc = config_to_json(c);
    CHECK(config_to_json(config_from_json(doc)) == doc);
    CHECK(doc["early_stop"]["patience"] == 3);
    CHECK(doc["selection_policy"] == "bfs");
}

TEST_CASE("mock designer follows the evaluator") {
    auto c = config_from_json(json::parse(R"({"evaluator": {"dimension": 5}})"));
    CHECK(c.designer.mock.dimension == 5);
    CHECK(c.designer.mock.mode == MockDesignerConfig::Mode::genome);
    c = config_from_json(json::parse(R"({"designer": {"dimension": 3, "mode": "dsl"}, "evaluator": {"dimension": 5}})"));
    CHECK(c.designer.mock.dimension == 3);
    CHECK(c.designer.mock.mode == MockDesignerConfig::Mode::dsl);
}

TEST_CASE("subprocess command forms and relative paths") {
    const auto base = std::filesystem::path("/cfg/dir");
    auto c = config_from_json(json::parse(R"({"evaluator": {"backend": "subprocess",
        "command": "python3 adapter.py --fast", "work_dir": "runs"}})"), base);
    CHECK(c.evaluator.subprocess.command == std::vector<std::string>{"python3", "adapter.py", "--fast"});
    CHECK(c.evaluator.subprocess.work_dir == base / "runs");
    c = config_from_json(json::parse(R"({"evaluator": {"backend": "subprocess", "command": ["a b", "c"]}})"));
    CHECK(c.evaluator.subprocess.command == std::vector<std::string>{"a b", "c"});
}

TEST_CASE("invalid configs are rejected") {
    for (const char* text : {
             R"({"bugdet": 10})",
             R"({"budget": 4, "init_count": 8})",
             R"({"eta": 0})",
             R"({"eta": 1.5})",
             R"({"lambda0": -0.1})",
             R"({"parallelism": 0})",
             R"({"action_counts": [0, 0, 0, 0, 0]})",
             R"({"action_counts": [1, 2, 3]})",
             R"({"k_range": [3, 2]})",
             R"({"selection_policy": "random"})",
             R"({"ablations": {"action_mode": "m9"}})",
             R"({"early_stop": {"patience": 0}})",
             R"({"designer": {"backend": "carrier-pigeon"}})",
             R"({"designer": {"mode": "lisp"}})",
             R"({"evaluator": {"backend": "subprocess"}})",
             R"({"evaluator": {"colour": 1}})",
             R"({"budget": "many"})",
         }) {
        CAPTURE(text);
        CHECK_THROWS_AS(config_from_json(json::parse(text)), ConfigError);
    }
}

TEST_CASE("load_config reports the path") {
    const auto dir = testutil::scratch("config");
    try {
        load_config(dir / "absent.json");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("absent.json") != std::string::npos);
    }
    std::ofstream(dir / "broken.json") << "{ nope";
    CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
    std::ofstream(dir / "script.json") << "{}";
    std::ofstream(dir / "ok.json") << R"({"designer": {"script": "script.json"}})";
    CHECK(load_config(dir / "ok.json").designer.mock.script == dir / "script.json");
}

TEST_CASE("shipped configs load") {
    const auto configs = std::filesystem::path(RFSEARCH_FIXTURES) / ".." / ".." / "configs";
    for (const char* name : {"synthetic.json", "toy.json"}) {
        CAPTURE(name);
        auto c = load_config(configs / name);
        CHECK_NOTHROW(make_designer_backend(c));
        CHECK_NOTHROW(make_evaluator(c));
    }
}
