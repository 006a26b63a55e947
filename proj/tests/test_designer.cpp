#include <doctest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ant_feedback.hpp"
#include "helpers.hpp"
#include "rfsearch/designer.hpp"
#include "rfsearch/dsl.hpp"
#include "rfsearch/errors.hpp"
#include "rfsearch/evaluation.hpp"

using namespace rfsearch;

namespace {

/// Replays fixed replies and records the prompts it saw.
class CannedBackend final : public DesignerBackend {
public:
    explicit CannedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    std::string complete(const PromptBundle& prompt, Rng&) override {
        prompts.push_back(prompt);
        if (fail_transport) throw TransportError("down");
        return replies_.at(std::min(next_++, replies_.size() - 1));
    }
    std::vector<PromptBundle> prompts;
    bool fail_transport = false;

private:
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
};

const TaskInfo kTask{"Reach the target.", "pos, target"};

CandidateProgram program(std::string source, std::string thought = "idea") {
    CandidateProgram c;
    c.source_text = std::move(source);
    c.design_thought = std::move(thought);
    return c;
}

PromptBundle context_prompt(ActionKind kind, std::vector<std::string> sources) {
    PromptBundle b;
    b.kind = kind;
    for (auto& s : sources) b.context.push_back(PromptContext{"t", s, 0.5, testutil::ant_feedback()});
    return b;
}

}  // namespace

TEST_CASE("designer reply parsing") {
    SUBCASE("thought and fenced code") {
        auto r = parse_designer_response("{ Reward speed. }\n```python\nreturn v\n```\ntrailing {x}");
        CHECK(r.parsed_thought == "Reward speed.");
        CHECK(r.parsed_code == "return v");
    }
    SUBCASE("braces inside code do not count as the thought") {
        auto r = parse_designer_response("```\nd = {\"a\": 1}\n```\nThen {the idea {nested}}.");
        CHECK(r.parsed_code == "d = {\"a\": 1}");
        CHECK(r.parsed_thought == "the idea {nested}");
    }
    SUBCASE("only the first fence is code") {
        auto r = parse_designer_response("```rfn\nfirst\n```\n```\nsecond\n```");
        CHECK(r.parsed_code == "first");
        CHECK_FALSE(r.parsed_thought);
    }
    SUBCASE("unterminated fence yields no code") {
        auto r = parse_designer_response("{a}\n```python\nx = 1\n");
        CHECK_FALSE(r.parsed_code);
        CHECK(r.parsed_thought == "a");
    }
}

TEST_CASE("self-verify score parsing") {
    CHECK(parse_self_verify("similarity is [0.5]") == 0.5);
    CHECK(parse_self_verify("[0.2] then [-0.75]") == -0.75);
    CHECK(parse_self_verify("[2.5]") == 1.0);
    CHECK(parse_self_verify("[-3]") == -1.0);
    CHECK(parse_self_verify("[+.25]") == 0.25);
    CHECK(parse_self_verify("[0.4] and [high]") == 0.4);
    CHECK_FALSE(parse_self_verify("no score"));
    CHECK_FALSE(parse_self_verify("[1e5] [.] [-] [0.1.2]"));
}

TEST_CASE("designer exchanges") {
    Rng rng(1);
    SUBCASE("generate requires code") {
        auto backend = std::make_shared<CannedBackend>(std::vector<std::string>{"{only a thought}"});
        Designer d(backend, {});
        CHECK_THROWS_AS(d.generate(PromptBundle{}, rng), ParseError);
    }
    SUBCASE("repair bumps the revision and keeps the thought") {
        auto backend = std::make_shared<CannedBackend>(std::vector<std::string>{"```\nfixed\n```"});
        Designer d(backend, {2, true, true});
        auto c = program("broken");
        auto fixed = d.repair(c, "Error: line 1", kTask, rng);
        CHECK(fixed.source_text == "fixed");
        CHECK(fixed.design_thought == "idea");
        CHECK(fixed.revision == 1);
        CHECK(fixed.lineage_kind == ActionKind::repair);
        CHECK(backend->prompts.back().kind == ActionKind::repair);
        CHECK(backend->prompts.back().user_text.find("Error: line 1") != std::string::npos);
        fixed = d.repair(fixed, "again", kTask, rng);
        CHECK(fixed.revision == 2);
        CHECK_THROWS_AS(d.repair(fixed, "again", kTask, rng), RetryExhausted);
    }
    SUBCASE("align falls back to the original thought") {
        auto backend = std::make_shared<CannedBackend>(std::vector<std::string>{"{Refined idea.}", "   "});
        Designer d(backend, {});
        auto c = program("code", "original");
        CHECK(d.align_thought(c, kTask, rng) == "Refined idea.");
        CHECK(d.align_thought(c, kTask, rng) == "original");
        backend->fail_transport = true;
        CHECK(d.align_thought(c, kTask, rng) == "original");
        Designer off(backend, {3, false, true});
        CHECK(off.align_thought(c, kTask, rng) == "original");
    }
    SUBCASE("verify defaults to zero") {
        auto backend = std::make_shared<CannedBackend>(std::vector<std::string>{"close match [0.6]", "unsure"});
        Designer d(backend, {});
        auto c = program("code");
        CHECK(d.self_verify(c, kTask, rng) == 0.6);
        CHECK(d.self_verify(c, kTask, rng) == 0.0);
        backend->fail_transport = true;
        CHECK(d.self_verify(c, kTask, rng) == 0.0);
        CHECK(Designer(backend, {3, true, false}).self_verify(c, kTask, rng) == 0.0);
    }
}

TEST_CASE("mock designer in genome mode") {
    MockDesignerConfig cfg;
    cfg.dimension = 4;
    MockDesigner mock(cfg);
    Designer d(std::shared_ptr<DesignerBackend>(&mock, [](auto*) {}), {});
    SyntheticEvaluator eval(LandscapeConfig{.dimension = 4});

    Rng a(9), b(9);
    PromptBundle init;
    init.kind = ActionKind::init;
    CHECK(mock.complete(init, a) == mock.complete(init, b));

    for (auto kind : {ActionKind::init, ActionKind::m1_mutation_structure, ActionKind::m2_mutation_params,
                      ActionKind::c3_crossover, ActionKind::r4_path_reasoning, ActionKind::d5_different_thought,
                      ActionKind::basic}) {
        auto prompt = kind == ActionKind::init ? init : context_prompt(kind, {"genome 1 1 1 1", "genome -1 -1 -1 -1"});
        Rng rng(static_cast<std::uint64_t>(kind) + 100);
        auto r = d.generate(prompt, rng);
        REQUIRE(r.parsed_code);
        CHECK(r.parsed_thought);
        CHECK(parse_genome(*r.parsed_code).size() == 4);
        CHECK(eval.evaluate(program(*r.parsed_code), {}).ok());
    }

    SUBCASE("m2 stays near its parent") {
        Rng rng(4);
        auto r = d.generate(context_prompt(ActionKind::m2_mutation_params, {"genome 0.5 0.5 0.5 0.5"}), rng);
        for (double v : parse_genome(*r.parsed_code)) CHECK(std::abs(v - 0.5) < 0.6);
    }
    SUBCASE("verify replies carry a bracketed score") {
        PromptBundle p;
        p.kind = ActionKind::verify;
        p.context.push_back(PromptContext{"t", "genome 1 1 1 1", {}, {}});
        Rng rng(2);
        auto v = parse_self_verify(mock.complete(p, rng));
        REQUIRE(v);
        CHECK((*v >= -1.0 && *v <= 1.0));
    }
}

TEST_CASE("mock designer in dsl mode produces parseable programs") {
    MockDesignerConfig cfg;
    cfg.mode = MockDesignerConfig::Mode::dsl;
    MockDesigner mock(cfg);
    Designer d(std::shared_ptr<DesignerBackend>(&mock, [](auto*) {}), {});
    PromptBundle init;
    init.kind = ActionKind::init;
    std::vector<std::string> pool;
    for (std::uint64_t s = 0; s < 20; ++s) {
        Rng rng(s);
        auto r = d.generate(init, rng);
        CHECK_NOTHROW(dsl::parse(*r.parsed_code, toy_vocabulary()));
        pool.push_back(*r.parsed_code);
    }
    for (auto kind : {ActionKind::m1_mutation_structure, ActionKind::m2_mutation_params, ActionKind::c3_crossover,
                      ActionKind::r4_path_reasoning, ActionKind::d5_different_thought}) {
        for (std::uint64_t s = 0; s < 10; ++s) {
            Rng rng(s * 31 + 7);
            auto r = d.generate(context_prompt(kind, {pool[s], pool[s + 10]}), rng);
            CHECK_NOTHROW(dsl::parse(*r.parsed_code, toy_vocabulary()));
        }
    }
}

TEST_CASE("mock error injection is repaired") {
    MockDesignerConfig cfg;
    cfg.dimension = 3;
    cfg.error_rate = 1.0;
    MockDesigner mock(cfg);
    Designer d(std::shared_ptr<DesignerBackend>(&mock, [](auto*) {}), {});
    SyntheticEvaluator eval(LandscapeConfig{.dimension = 3});
    Rng rng(8);
    PromptBundle init;
    init.kind = ActionKind::init;
    auto r = d.generate(init, rng);
    auto c = program(*r.parsed_code);
    auto outcome = eval.evaluate(c, {});
    REQUIRE_FALSE(outcome.ok());
    auto fixed = d.repair(c, *outcome.traceback, kTask, rng);
    CHECK(eval.evaluate(fixed, {}).ok());
}

TEST_CASE("mock script replies come first, per action") {
    const auto dir = testutil::scratch("mock_script");
    const auto path = dir / "script.json";
    std::ofstream(path) << R"({"init": ["{a}\n```\ngenome 1 2\n```"], "m1": ["no code"]})";
    MockDesignerConfig cfg;
    cfg.dimension = 2;
    cfg.script = path;
    MockDesigner mock(cfg);
    Rng rng(0);
    PromptBundle init;
    init.kind = ActionKind::init;
    CHECK(mock.complete(init, rng) == "{a}\n```\ngenome 1 2\n```");
    CHECK(mock.complete(context_prompt(ActionKind::m1_mutation_structure, {"genome 0 0"}), rng) == "no code");
    CHECK(mock.scripted_replies_used() == 2);
    CHECK(mock.complete(init, rng) != "{a}\n```\ngenome 1 2\n```");
    CHECK(mock.scripted_replies_used() == 2);

    std::ofstream(dir / "bad.json") << R"({"m9": []})";
    cfg.script = dir / "bad.json";
    CHECK_THROWS_AS(MockDesigner{cfg}, ConfigError);
    cfg.script = dir / "missing.json";
    CHECK_THROWS_AS(MockDesigner{cfg}, ConfigError);
}

TEST_CASE("chat-completion payloads") {
    PromptBundle p;
    p.system_text = "sys";
    p.user_text = "user \"quoted\"";
    auto body = nlohmann::json::parse(chat_request_body(p, "m", 0.2));
    CHECK(body["model"] == "m");
    CHECK(body["temperature"] == 0.2);
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][1]["content"] == "user \"quoted\"");
    CHECK(chat_response_content(R"({"choices":[{"message":{"content":"hi"}}]})") == "hi");
    CHECK_THROWS_AS(chat_response_content("{}"), ParseError);
    CHECK_THROWS_AS(chat_response_content("not json"), ParseError);
}

TEST_CASE("http designer against a local server") {
    httplib::Server server;
    std::atomic<int> calls{0};
    std::string seen_auth;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        const int n = ++calls;
        seen_auth = req.get_header_value("Authorization");
        if (n == 1) {
            res.status = 503;
            return;
        }
        auto doc = nlohmann::json::parse(req.body);
        nlohmann::json reply;
        reply["choices"][0]["message"]["content"] = "echo " + doc["messages"][1]["content"].get<std::string>();
        res.set_content(reply.dump(), "application/json");
    });
    server.Post("/forbidden", [](const httplib::Request&, httplib::Response& res) { res.status = 403; });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpDesignerConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
    cfg.model = "test-model";
    cfg.api_key = "k123";
    cfg.timeout = std::chrono::seconds(5);
    Rng rng(0);
    PromptBundle p;
    p.user_text = "hello";

    SUBCASE("retries a 5xx then succeeds") {
        HttpDesigner d(cfg);
        CHECK(d.complete(p, rng) == "echo hello");
        CHECK(calls == 2);
        CHECK(seen_auth == "Bearer k123");
    }
    SUBCASE("client errors are not retried") {
        cfg.path = "/forbidden";
        HttpDesigner d(cfg);
        CHECK_THROWS_AS(d.complete(p, rng), TransportError);
    }
    SUBCASE("unreachable endpoint exhausts retries") {
        cfg.endpoint = "http://127.0.0.1:1";
        cfg.transport_retries = 1;
        HttpDesigner d(cfg);
        CHECK_THROWS_AS(d.complete(p, rng), TransportError);
    }
    server.stop();
    t.join();

    HttpDesignerConfig empty;
    CHECK_THROWS_AS(HttpDesigner{empty}, ConfigError);
}
