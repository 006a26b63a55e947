#include <doctest.h>

#include <atomic>
#include <fstream>

#include "helpers.hpp"
#include "rfsearch/errors.hpp"
#include "rfsearch/orchestrator.hpp"

using namespace rfsearch;

namespace {

SearchConfig small_config(int budget = 32, std::uint64_t seed = 5) {
    SearchConfig c;
    c.budget = budget;
    c.seed = seed;
    c.evaluator.landscape.dimension = 4;
    c.designer.mock.dimension = 4;
    c.task = {"Maximize the bump sum.", "genome: 4 reals"};
    return c;
}

std::shared_ptr<DesignerBackend> mock(const SearchConfig& c) { return std::make_shared<MockDesigner>(c.designer.mock); }
std::shared_ptr<Evaluator> synthetic(const SearchConfig& c) {
    return std::make_shared<SyntheticEvaluator>(c.evaluator.landscape);
}

class BrokenEvaluator final : public Evaluator {
public:
    EvalOutcome evaluate(const CandidateProgram&, const EvalRequest&) override {
        ++calls;
        return EvalOutcome::failure("RuntimeError: trainer crashed");
    }
    int epoch_freq() const override { return 1; }
    std::atomic<int> calls{0};
};

}  // namespace

TEST_CASE("lambda schedule") {
    CHECK(lambda_schedule(0.4, 0, 64) == 0.4);
    CHECK(lambda_schedule(0.4, 64, 64) == 0.0);
    CHECK(lambda_schedule(0.4, 16, 64) == 0.4 * 48.0 / 64.0);
}

TEST_CASE("budget caps the last expansion") {
    auto c = small_config(12);
    Search s(c, mock(c), synthetic(c));
    s.run();
    const auto& st = s.state();
    CHECK(st.t == 12);
    CHECK(st.tree.size() == 13);
    REQUIRE(st.trace.entries.size() == 12);
    for (int i = 8; i < 12; ++i) {
        CHECK(st.trace.entries[i].selection_t == 8);
        CHECK(st.trace.entries[i].t == i + 1);
    }
    CHECK(st.trace.entries[8].kind == ActionKind::m1_mutation_structure);
    CHECK(st.trace.entries[11].kind == ActionKind::m2_mutation_params);
    CHECK(s.finished());
}

TEST_CASE("a run keeps its invariants at every step") {
    auto c = small_config(40);
    Search s(c, mock(c), synthetic(c));
    int steps = 0;
    s.on_step = [&](const SearchState& st) {
        ++steps;
        CHECK_FALSE(find_visit_sum_violation(st.tree));
        CHECK(st.tree.size() == static_cast<std::size_t>(st.t) + 1);
        for (const auto& e : st.trace.entries) CHECK(e.lambda == lambda_schedule(c.lambda0, e.selection_t, c.budget));
        for (std::size_t i = 1; i < st.trace.entries.size(); ++i)
            CHECK(*st.trace.entries[i].best_so_far >= *st.trace.entries[i - 1].best_so_far);
    };
    s.run();
    CHECK(steps == 5);
    // Expanded nodes trade their own visit for their children's sum.
    int leaves = 0;
    for (const auto& n : s.state().tree.nodes()) leaves += n.id != kRootId && n.children.empty();
    CHECK(s.state().tree.root().visit_count == leaves);
    REQUIRE(s.best());
    CHECK(*s.state().tree.node(*s.best()).score == *s.state().trace.entries.back().best_so_far);
}

TEST_CASE("runs are deterministic regardless of parallelism") {
    auto c = small_config(48, 21);
    c.designer.mock.error_rate = 0.2;
    Search a(c, mock(c), synthetic(c));
    a.run();
    Search b(c, mock(c), synthetic(c));
    b.run();
    CHECK(a.state().trace.hash() == b.state().trace.hash());
    CHECK(run_fingerprint(a.state()) == run_fingerprint(b.state()));

    c.parallelism = 1;
    Search serial(c, mock(c), synthetic(c));
    serial.run();
    CHECK(run_fingerprint(serial.state()) == run_fingerprint(a.state()));

    c.seed = 22;
    Search other(c, mock(c), synthetic(c));
    other.run();
    CHECK(other.state().trace.hash() != a.state().trace.hash());
}

TEST_CASE("stopping at a budget cursor and continuing matches the full run") {
    auto c = small_config(40, 9);
    Search full(c, mock(c), synthetic(c));
    full.run();
    Search part(c, mock(c), synthetic(c));
    part.run(24);
    CHECK(part.state().t == 24);
    Search rest(part.state(), mock(c), synthetic(c));
    rest.run();
    CHECK(run_fingerprint(rest.state()) == run_fingerprint(full.state()));
}

TEST_CASE("a reply without code is repaired") {
    const auto dir = testutil::scratch("orchestrator_script");
    std::ofstream(dir / "script.json") << R"({"init": ["I forgot the code."],
        "repair": ["{fixed}\n```\ngenome 1 1 1 1\n```"]})";
    auto c = small_config(1);
    c.init_count = 1;
    c.parallelism = 1;
    c.designer.mock.script = dir / "script.json";
    auto backend = std::make_shared<MockDesigner>(c.designer.mock);
    Search s(c, backend, synthetic(c));
    s.run();
    const auto& n = s.state().tree.node(NodeId{1});
    CHECK(n.status == NodeStatus::evaluated);
    CHECK(n.candidate.revision == 1);
    CHECK(n.candidate.lineage_kind == ActionKind::repair);
    CHECK(n.candidate.source_text == "genome 1 1 1 1");
    CHECK(backend->scripted_replies_used() == 2);
}

TEST_CASE("repair attempts are bounded") {
    auto c = small_config(8);
    c.retry_limit = 2;
    auto evaluator = std::make_shared<BrokenEvaluator>();
    Search s(c, mock(c), evaluator);
    CHECK_THROWS_AS(s.initialize(), AllInitFailed);
    CHECK(evaluator->calls == 8 * 3);

    Job job;
    job.node = NodeId{1};
    job.spec.kind = ActionKind::init;
    auto designer = make_designer(c, mock(c));
    auto node = simulate(job, designer, *evaluator, c.task);
    CHECK(node.status == NodeStatus::failed);
    CHECK(node.candidate.revision == 2);
    CHECK(node.traceback == "RuntimeError: trainer crashed");
}

TEST_CASE("early stopping") {
    SUBCASE("target reached at init") {
        auto c = small_config(64);
        c.early_stop.target_score = -1.0;
        Search s(c, mock(c), synthetic(c));
        s.run();
        CHECK(s.state().stopped_early);
        CHECK(s.state().t == c.init_count);
    }
    SUBCASE("patience") {
        auto c = small_config(200);
        c.early_stop.patience = 1;
        Search s(c, mock(c), synthetic(c));
        s.run();
        CHECK(s.state().stopped_early);
        CHECK(s.state().t < 200);
        CHECK(s.state().stale_expansions == 1);
    }
}

TEST_CASE("selection policy and action ablations run") {
    for (auto policy : {SelectionPolicy::uct, SelectionPolicy::dfs, SelectionPolicy::bfs, SelectionPolicy::greedy}) {
        for (const char* mode : {"full", "basic_only", "m2,d5"}) {
            CAPTURE(to_string(policy));
            CAPTURE(mode);
            auto c = small_config(24);
            c.selection_policy = policy;
            c.ablations.action_mode = ActionMode::parse(mode);
            c.ablations.self_verify = false;
            Search s(c, mock(c), synthetic(c));
            s.run();
            CHECK(s.state().t == 24);
            if (std::string(mode) == "basic_only")
                for (std::size_t i = 8; i < 24; ++i) CHECK(s.state().trace.entries[i].kind == ActionKind::basic);
        }
    }
}

TEST_CASE("comparators spend the same budget") {
    auto c = small_config(40);
    for (auto kind : {ComparatorKind::greedy, ComparatorKind::evolution}) {
        auto r = run_comparator(kind, c, mock(c), synthetic(c));
        CHECK(r.nodes.size() == 40);
        CHECK(r.trace.entries.size() == 40);
        REQUIRE(r.best);
        CHECK(*r.nodes[*r.best].score == *r.trace.entries.back().best_so_far);
        auto again = run_comparator(kind, c, mock(c), synthetic(c));
        CHECK(again.trace.hash() == r.trace.hash());
    }
}
