#include <doctest.h>

#include <cmath>
#include <limits>

#include "random_programs.hpp"
#include "rfsearch/dsl.hpp"
#include "rfsearch/errors.hpp"
#include "rfsearch/rng.hpp"

using namespace rfsearch;
using namespace rfsearch::dsl;

using namespace testutil;

TEST_CASE("parses components and evaluates them") {
    const auto r = parse("component progress = 10.0 * (prev - dist);\n# bonus\ncomponent bonus = indicator(dist < 0.05);");
    REQUIRE(r.components.size() == 2);
    CHECK(r.components[0].name == "progress");
    const auto e = evaluate(r, Bindings{{"prev", 0.5}, {"dist", 0.3}});
    CHECK(e.components[0].second == doctest::Approx(2.0));
    CHECK(e.components[1].second == 0.0);
    CHECK(e.total == doctest::Approx(2.0));
}

TEST_CASE("precedence and unary minus") {
    CHECK(evaluate(parse("component x = 1 + 2 * 3;"), {}).total == 7.0);
    CHECK(evaluate(parse("component x = (1 + 2) * 3;"), {}).total == 9.0);
    CHECK(evaluate(parse("component x = -2 * -3;"), {}).total == 6.0);
    CHECK(evaluate(parse("component x = 8 / 4 / 2;"), {}).total == 1.0);
    CHECK(evaluate(parse("component x = 8 - 4 - 2;"), {}).total == 2.0);
    CHECK(evaluate(parse("component x = min(1, 2) + max(1, 2) + abs(-3);"), {}).total == 6.0);
    CHECK(evaluate(parse("component x = norm(a, b);"), Bindings{{"a", 3}, {"b", 4}}).total == 5.0);
    CHECK(evaluate(parse("component x = indicator(a > 1);"), Bindings{{"a", 2}}).total == 1.0);
}

TEST_CASE("division by zero and overflow saturate") {
    CHECK(evaluate(parse("component x = 1 / 0;"), {}).total == kSentinel);
    CHECK(evaluate(parse("component x = -1 / 0;"), {}).total == -kSentinel);
    CHECK(evaluate(parse("component x = 0 / 0;"), {}).total == 0.0);
    CHECK(evaluate(parse("component x = exp(1000);"), {}).total == kSentinel);
}

TEST_CASE("syntax errors carry position and a traceback") {
    try {
        parse("component x = 1 +;\n");
        FAIL("expected a syntax error");
    } catch (const SyntaxError& e) {
        CHECK(e.line() == 1);
        CHECK(e.column() == 18);
        CHECK(e.traceback().find("Traceback (most recent call last):") == 0);
        CHECK(e.traceback().find("SyntaxError: ") != std::string::npos);
        CHECK(e.traceback().find("';'") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("component = 1;"), SyntaxError);
    CHECK_THROWS_AS(parse("component x = 1"), SyntaxError);
    CHECK_THROWS_AS(parse("component x = indicator(a);"), SyntaxError);
    CHECK_THROWS_AS(parse("component x = 1 $ 2;"), SyntaxError);
}

TEST_CASE("unknown variables are reported by name") {
    const std::vector<std::string> vocab = {"dist"};
    try {
        parse("component x = dist +\n  speed;", vocab);
        FAIL("expected an unknown variable");
    } catch (const UnknownVariable& e) {
        CHECK(e.name() == "speed");
        CHECK(e.line() == 2);
        CHECK(e.column() == 3);
    }
}

TEST_CASE("missing bindings throw") {
    CHECK_THROWS_AS(evaluate(parse("component x = a;"), {}), MissingBinding);
}

TEST_CASE("printing uses minimal parentheses") {
    CHECK(pretty_print(parse("component x = ((a + b)) * c;")) == "component x = (a + b) * c;");
    CHECK(pretty_print(parse("component x = a - (b - c);")) == "component x = a - (b - c);");
    CHECK(pretty_print(parse("component x = (a - b) - c;")) == "component x = a - b - c;");
    CHECK(pretty_print(parse("component x = -(2);")) == "component x = -(2.0);");
    CHECK(pretty_print(parse("component x = -2;")) == "component x = -2.0;");
    CHECK(format_constant(5) == "5.0");
    CHECK(format_constant(0.1) == "0.1");
}

TEST_CASE("parse after print is the identity on random trees") {
    Rng rng(99);
    for (int i = 0; i < 1000; ++i) {
        const RewardExpr r = random_program(rng);
        const std::string text = pretty_print(r);
        RewardExpr back;
        REQUIRE_NOTHROW(back = parse(text));
        INFO(text);
        REQUIRE(structurally_equal(r, back));
        REQUIRE(pretty_print(back) == text);
    }
}

TEST_CASE("total equals the sum of components and never escapes") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const RewardExpr r = random_program(rng);
        const Bindings b = random_bindings(rng, i % 2 == 1);
        const Evaluation e = evaluate(r, b);
        double sum = 0.0;
        for (const auto& [name, v] : e.components) {
            REQUIRE(std::isfinite(v));
            REQUIRE(std::abs(v) <= kSentinel);
            sum += v;
        }
        REQUIRE(std::isfinite(e.total));
        REQUIRE(e.total == sum);

        const CompiledReward compiled(r, kVars);
        std::vector<double> values;
        for (const auto& v : kVars) values.push_back(b.at(v));
        std::vector<double> out(compiled.component_count());
        const double total = compiled.evaluate(values, out);
        REQUIRE(total == e.total);
        for (std::size_t k = 0; k < out.size(); ++k) REQUIRE(out[k] == e.components[k].second);
    }
}

TEST_CASE("referenced variables in first-use order") {
    const auto r = parse("component x = b + a;\ncomponent y = norm(c, a);");
    CHECK(referenced_variables(r) == std::vector<std::string>{"b", "a", "c"});
}
