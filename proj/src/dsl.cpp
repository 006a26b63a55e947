#include "rfsearch/dsl.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <fmt/format.h>

namespace rfsearch::dsl {

// ---------------------------------------------------------------- nodes

ExprPtr make_constant(double value) { return std::make_shared<const Expr>(Expr{Constant{value}}); }
ExprPtr make_variable(std::string name) { return std::make_shared<const Expr>(Expr{Variable{std::move(name)}}); }
ExprPtr make_unary(UnaryOp op, ExprPtr operand) {
    return std::make_shared<const Expr>(Expr{Unary{op, std::move(operand)}});
}
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
    return std::make_shared<const Expr>(Expr{Binary{op, std::move(lhs), std::move(rhs)}});
}
ExprPtr make_gate(CompareOp op, ExprPtr lhs, ExprPtr rhs) {
    return std::make_shared<const Expr>(Expr{Gate{op, std::move(lhs), std::move(rhs)}});
}
ExprPtr make_norm(std::vector<std::string> variables) {
    return std::make_shared<const Expr>(Expr{Norm{std::move(variables)}});
}

bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&](const auto& lhs) -> bool {
            using T = std::decay_t<decltype(lhs)>;
            const auto& rhs = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, Constant>) {
                return lhs.value == rhs.value;
            } else if constexpr (std::is_same_v<T, Variable>) {
                return lhs.name == rhs.name;
            } else if constexpr (std::is_same_v<T, Unary>) {
                return lhs.op == rhs.op && structurally_equal(*lhs.operand, *rhs.operand);
            } else if constexpr (std::is_same_v<T, Binary> || std::is_same_v<T, Gate>) {
                return lhs.op == rhs.op && structurally_equal(*lhs.lhs, *rhs.lhs) &&
                       structurally_equal(*lhs.rhs, *rhs.rhs);
            } else {
                return lhs.variables == rhs.variables;
            }
        },
        a.node);
}

bool structurally_equal(const RewardExpr& a, const RewardExpr& b) {
    if (a.components.size() != b.components.size()) return false;
    for (std::size_t i = 0; i < a.components.size(); ++i) {
        if (a.components[i].name != b.components[i].name) return false;
        if (!structurally_equal(*a.components[i].expr, *b.components[i].expr)) return false;
    }
    return true;
}

namespace {

void collect_variables(const Expr& e, std::vector<std::string>& out) {
    auto add = [&](const std::string& name) {
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    };
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Variable>) {
                add(n.name);
            } else if constexpr (std::is_same_v<T, Unary>) {
                collect_variables(*n.operand, out);
            } else if constexpr (std::is_same_v<T, Binary> || std::is_same_v<T, Gate>) {
                collect_variables(*n.lhs, out);
                collect_variables(*n.rhs, out);
            } else if constexpr (std::is_same_v<T, Norm>) {
                for (const auto& v : n.variables) add(v);
            }
        },
        e.node);
}

}  // namespace

std::vector<std::string> referenced_variables(const RewardExpr& expr) {
    std::vector<std::string> out;
    for (const auto& c : expr.components) collect_variables(*c.expr, out);
    return out;
}

// ---------------------------------------------------------------- errors

DslError::DslError(std::string kind, std::string detail, int line, int column)
    : Error(fmt::format("{} at line {}, column {}: {}", kind, line, column, detail)),
      kind_(std::move(kind)),
      detail_(std::move(detail)),
      line_(line),
      column_(column) {}

std::string DslError::traceback() const {
    return fmt::format("Traceback (most recent call last):\n  reward program, line {}, column {}\n{}: {}", line_,
                       column_, kind_, detail_);
}

SyntaxError::SyntaxError(std::string detail, int line, int column)
    : DslError("SyntaxError", std::move(detail), line, column) {}

UnknownVariable::UnknownVariable(std::string name, int line, int column)
    : DslError("UnknownVariable", fmt::format("unknown variable '{}'", name), line, column), name_(std::move(name)) {}

// ---------------------------------------------------------------- lexer

namespace {

enum class Tok { ident, number, lparen, rparen, comma, semicolon, assign, plus, minus, star, slash, less, greater, end };

struct Token {
    Tok kind;
    std::string text;
    double number = 0.0;
    int line = 1;
    int column = 1;
};

std::string describe(const Token& t) {
    if (t.kind == Tok::end) return "end of input";
    return fmt::format("'{}'", t.text);
}

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    int line = 1;
    int col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    while (i < src.size()) {
        const char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '#') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        Token t{Tok::end, {}, 0.0, line, col};
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
            t.kind = Tok::ident;
            t.text = std::string(src.substr(i, j - i));
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < src.size() &&
                                                            std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            if (j < src.size() && src[j] == '.') {
                ++j;
                while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            }
            if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
                if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
                    while (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) ++k;
                    j = k;
                }
            }
            t.kind = Tok::number;
            t.text = std::string(src.substr(i, j - i));
            const char* first = t.text.data();
            auto [ptr, ec] = std::from_chars(first, first + t.text.size(), t.number);
            if (ec != std::errc() || ptr != first + t.text.size() || !std::isfinite(t.number))
                throw SyntaxError(fmt::format("malformed number '{}'", t.text), line, col);
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        switch (c) {
            case '(': t.kind = Tok::lparen; break;
            case ')': t.kind = Tok::rparen; break;
            case ',': t.kind = Tok::comma; break;
            case ';': t.kind = Tok::semicolon; break;
            case '=': t.kind = Tok::assign; break;
            case '+': t.kind = Tok::plus; break;
            case '-': t.kind = Tok::minus; break;
            case '*': t.kind = Tok::star; break;
            case '/': t.kind = Tok::slash; break;
            case '<': t.kind = Tok::less; break;
            case '>': t.kind = Tok::greater; break;
            default: throw SyntaxError(fmt::format("unexpected character '{}'", c), line, col);
        }
        t.text = std::string(1, c);
        advance(1);
        out.push_back(std::move(t));
    }
    out.push_back(Token{Tok::end, {}, 0.0, line, col});
    return out;
}

const std::set<std::string, std::less<>> kReserved = {"component", "abs", "exp", "tanh", "min", "max", "norm",
                                                      "indicator"};

// ---------------------------------------------------------------- parser

class Parser {
public:
    Parser(std::vector<Token> tokens, std::span<const std::string> vocabulary)
        : tokens_(std::move(tokens)), vocabulary_(vocabulary) {}

    RewardExpr program() {
        RewardExpr out;
        std::set<std::string, std::less<>> names;
        if (peek().kind == Tok::end) fail(peek(), "expected at least one 'component' declaration");
        while (peek().kind != Tok::end) {
            const Token& kw = peek();
            if (kw.kind != Tok::ident || kw.text != "component")
                fail(kw, fmt::format("expected 'component', found {}", describe(kw)));
            ++pos_;
            const Token& name = peek();
            if (name.kind != Tok::ident || kReserved.contains(name.text))
                fail(name, fmt::format("expected component name, found {}", describe(name)));
            if (!names.insert(name.text).second)
                fail(name, fmt::format("duplicate component '{}'", name.text));
            ++pos_;
            expect(Tok::assign, "'=' after component name");
            ExprPtr e = additive();
            expect(Tok::semicolon, "';' after component expression");
            out.components.push_back(Component{name.text, std::move(e)});
        }
        return out;
    }

private:
    const Token& peek() const { return tokens_[pos_]; }

    [[noreturn]] void fail(const Token& t, std::string message) const {
        throw SyntaxError(std::move(message), t.line, t.column);
    }

    void expect(Tok kind, std::string_view what) {
        if (peek().kind != kind) fail(peek(), fmt::format("expected {}, found {}", what, describe(peek())));
        ++pos_;
    }

    ExprPtr additive() {
        ExprPtr lhs = multiplicative();
        while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
            const BinaryOp op = peek().kind == Tok::plus ? BinaryOp::add : BinaryOp::sub;
            ++pos_;
            lhs = make_binary(op, std::move(lhs), multiplicative());
        }
        return lhs;
    }

    ExprPtr multiplicative() {
        ExprPtr lhs = unary();
        while (peek().kind == Tok::star || peek().kind == Tok::slash) {
            const BinaryOp op = peek().kind == Tok::star ? BinaryOp::mul : BinaryOp::div;
            ++pos_;
            lhs = make_binary(op, std::move(lhs), unary());
        }
        return lhs;
    }

    ExprPtr unary() {
        if (peek().kind == Tok::minus) {
            ++pos_;
            // A minus directly before a literal folds into a negative constant.
            if (peek().kind == Tok::number) {
                const double v = peek().number;
                ++pos_;
                return make_constant(-v);
            }
            return make_unary(UnaryOp::negate, unary());
        }
        return primary();
    }

    ExprPtr primary() {
        const Token& t = peek();
        if (t.kind == Tok::number) {
            ++pos_;
            return make_constant(t.number);
        }
        if (t.kind == Tok::lparen) {
            ++pos_;
            ExprPtr inner = additive();
            expect(Tok::rparen, "')'");
            return inner;
        }
        if (t.kind == Tok::ident) {
            if (kReserved.contains(t.text)) return call(t);
            ++pos_;
            check_variable(t);
            return make_variable(t.text);
        }
        fail(t, fmt::format("expected expression, found {}", describe(t)));
    }

    ExprPtr call(const Token& fn) {
        ++pos_;
        if (fn.text == "component") fail(fn, "unexpected 'component' inside an expression");
        expect(Tok::lparen, fmt::format("'(' after '{}'", fn.text));
        if (fn.text == "abs" || fn.text == "exp" || fn.text == "tanh") {
            ExprPtr arg = additive();
            expect(Tok::rparen, "')'");
            const UnaryOp op = fn.text == "abs" ? UnaryOp::abs : fn.text == "exp" ? UnaryOp::exp : UnaryOp::tanh;
            return make_unary(op, std::move(arg));
        }
        if (fn.text == "min" || fn.text == "max") {
            ExprPtr a = additive();
            expect(Tok::comma, fmt::format("',' between the arguments of '{}'", fn.text));
            ExprPtr b = additive();
            expect(Tok::rparen, "')'");
            return make_binary(fn.text == "min" ? BinaryOp::min : BinaryOp::max, std::move(a), std::move(b));
        }
        if (fn.text == "norm") {
            std::vector<std::string> vars;
            for (;;) {
                const Token& v = peek();
                if (v.kind != Tok::ident || kReserved.contains(v.text))
                    fail(v, fmt::format("norm() takes variable names, found {}", describe(v)));
                check_variable(v);
                vars.push_back(v.text);
                ++pos_;
                if (peek().kind == Tok::comma) {
                    ++pos_;
                    continue;
                }
                break;
            }
            expect(Tok::rparen, "')'");
            return make_norm(std::move(vars));
        }
        // indicator(a < b) / indicator(a > b)
        ExprPtr lhs = additive();
        CompareOp op;
        if (peek().kind == Tok::less) {
            op = CompareOp::less;
        } else if (peek().kind == Tok::greater) {
            op = CompareOp::greater;
        } else {
            fail(peek(), fmt::format("expected '<' or '>' inside indicator(), found {}", describe(peek())));
        }
        ++pos_;
        ExprPtr rhs = additive();
        expect(Tok::rparen, "')'");
        return make_gate(op, std::move(lhs), std::move(rhs));
    }

    void check_variable(const Token& t) const {
        if (vocabulary_.empty()) return;
        if (std::find(vocabulary_.begin(), vocabulary_.end(), t.text) == vocabulary_.end())
            throw UnknownVariable(t.text, t.line, t.column);
    }

    std::vector<Token> tokens_;
    std::span<const std::string> vocabulary_;
    std::size_t pos_ = 0;
};

}  // namespace

RewardExpr parse(std::string_view source, std::span<const std::string> vocabulary) {
    return Parser(tokenize(source), vocabulary).program();
}

// ---------------------------------------------------------------- printer

namespace {

constexpr int kAdditive = 1;
constexpr int kMultiplicative = 2;
constexpr int kUnary = 3;
constexpr int kPrimary = 4;

int precedence(const Expr& e) {
    if (const auto* c = std::get_if<Constant>(&e.node)) return std::signbit(c->value) ? kUnary : kPrimary;
    if (const auto* u = std::get_if<Unary>(&e.node)) return u->op == UnaryOp::negate ? kUnary : kPrimary;
    if (const auto* b = std::get_if<Binary>(&e.node)) {
        switch (b->op) {
            case BinaryOp::add:
            case BinaryOp::sub: return kAdditive;
            case BinaryOp::mul:
            case BinaryOp::div: return kMultiplicative;
            default: return kPrimary;
        }
    }
    return kPrimary;
}

std::string wrap(const Expr& e, bool parens) {
    std::string s = pretty_print(e);
    return parens ? "(" + s + ")" : s;
}

}  // namespace

std::string format_constant(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    std::string s(buf, ptr);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string pretty_print(const Expr& expr) {
    return std::visit(
        [&](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return format_constant(n.value);
            } else if constexpr (std::is_same_v<T, Variable>) {
                return n.name;
            } else if constexpr (std::is_same_v<T, Unary>) {
                switch (n.op) {
                    case UnaryOp::negate: {
                        const auto* c = std::get_if<Constant>(&n.operand->node);
                        const bool parens = precedence(*n.operand) < kUnary || (c && !std::signbit(c->value));
                        return "-" + wrap(*n.operand, parens);
                    }
                    case UnaryOp::abs: return "abs(" + pretty_print(*n.operand) + ")";
                    case UnaryOp::exp: return "exp(" + pretty_print(*n.operand) + ")";
                    case UnaryOp::tanh: return "tanh(" + pretty_print(*n.operand) + ")";
                }
                return {};
            } else if constexpr (std::is_same_v<T, Binary>) {
                if (n.op == BinaryOp::min || n.op == BinaryOp::max)
                    return fmt::format("{}({}, {})", n.op == BinaryOp::min ? "min" : "max", pretty_print(*n.lhs),
                                       pretty_print(*n.rhs));
                const int p = precedence(expr);
                const char* sym = n.op == BinaryOp::add   ? " + "
                                  : n.op == BinaryOp::sub ? " - "
                                  : n.op == BinaryOp::mul ? " * "
                                                          : " / ";
                return wrap(*n.lhs, precedence(*n.lhs) < p) + sym + wrap(*n.rhs, precedence(*n.rhs) <= p);
            } else if constexpr (std::is_same_v<T, Gate>) {
                return fmt::format("indicator({} {} {})", pretty_print(*n.lhs), n.op == CompareOp::less ? "<" : ">",
                                   pretty_print(*n.rhs));
            } else {
                return fmt::format("norm({})", fmt::join(n.variables, ", "));
            }
        },
        expr.node);
}

std::string pretty_print(const RewardExpr& expr) {
    std::string out;
    for (std::size_t i = 0; i < expr.components.size(); ++i) {
        if (i > 0) out += "\n";
        out += fmt::format("component {} = {};", expr.components[i].name, pretty_print(*expr.components[i].expr));
    }
    return out;
}

// ---------------------------------------------------------------- evaluation

double saturate(double value) {
    if (std::isnan(value)) return 0.0;
    return std::clamp(value, -kSentinel, kSentinel);
}

namespace {

double safe_div(double num, double den) {
    if (den == 0.0) {
        if (num > 0.0) return kSentinel;
        if (num < 0.0) return -kSentinel;
        return 0.0;
    }
    return saturate(num / den);
}

double apply_unary(UnaryOp op, double x) {
    switch (op) {
        case UnaryOp::negate: return -x;
        case UnaryOp::abs: return std::abs(x);
        case UnaryOp::exp: return saturate(std::exp(x));
        case UnaryOp::tanh: return std::tanh(x);
    }
    return 0.0;
}

double apply_binary(BinaryOp op, double a, double b) {
    switch (op) {
        case BinaryOp::add: return saturate(a + b);
        case BinaryOp::sub: return saturate(a - b);
        case BinaryOp::mul: return saturate(a * b);
        case BinaryOp::div: return safe_div(a, b);
        case BinaryOp::min: return std::min(a, b);
        case BinaryOp::max: return std::max(a, b);
    }
    return 0.0;
}

double apply_gate(CompareOp op, double a, double b) {
    return (op == CompareOp::less ? a < b : a > b) ? 1.0 : 0.0;
}

double norm_of(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return saturate(std::sqrt(sum));
}

double eval_node(const Expr& e, const Bindings& bindings) {
    return std::visit(
        [&](const auto& n) -> double {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return saturate(n.value);
            } else if constexpr (std::is_same_v<T, Variable>) {
                auto it = bindings.find(n.name);
                if (it == bindings.end()) throw MissingBinding(fmt::format("no binding for variable '{}'", n.name));
                return saturate(it->second);
            } else if constexpr (std::is_same_v<T, Unary>) {
                return apply_unary(n.op, eval_node(*n.operand, bindings));
            } else if constexpr (std::is_same_v<T, Binary>) {
                const double a = eval_node(*n.lhs, bindings);
                return apply_binary(n.op, a, eval_node(*n.rhs, bindings));
            } else if constexpr (std::is_same_v<T, Gate>) {
                const double a = eval_node(*n.lhs, bindings);
                return apply_gate(n.op, a, eval_node(*n.rhs, bindings));
            } else {
                std::vector<double> values;
                for (const auto& v : n.variables) {
                    auto it = bindings.find(v);
                    if (it == bindings.end()) throw MissingBinding(fmt::format("no binding for variable '{}'", v));
                    values.push_back(saturate(it->second));
                }
                return norm_of(values);
            }
        },
        e.node);
}

}  // namespace

Evaluation evaluate(const RewardExpr& expr, const Bindings& bindings) {
    Evaluation out;
    for (const auto& c : expr.components) {
        const double v = eval_node(*c.expr, bindings);
        out.components.emplace_back(c.name, v);
        out.total += v;
    }
    return out;
}

// ---------------------------------------------------------------- compiled form


namespace {

template <class Op>
void compile_node(const Expr& e, std::span<const std::string> vocabulary, std::vector<Op>& code) {
    auto slot_of = [&](const std::string& name) {
        auto it = std::find(vocabulary.begin(), vocabulary.end(), name);
        if (it == vocabulary.end()) throw MissingBinding(fmt::format("no binding for variable '{}'", name));
        return static_cast<std::size_t>(it - vocabulary.begin());
    };
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            Op op{};
            if constexpr (std::is_same_v<T, Constant>) {
                op.code = Op::Code::constant;
                op.value = saturate(n.value);
            } else if constexpr (std::is_same_v<T, Variable>) {
                op.code = Op::Code::variable;
                op.slot = slot_of(n.name);
            } else if constexpr (std::is_same_v<T, Unary>) {
                compile_node(*n.operand, vocabulary, code);
                op.code = Op::Code::unary;
                op.unary = n.op;
            } else if constexpr (std::is_same_v<T, Binary>) {
                compile_node(*n.lhs, vocabulary, code);
                compile_node(*n.rhs, vocabulary, code);
                op.code = Op::Code::binary;
                op.binary = n.op;
            } else if constexpr (std::is_same_v<T, Gate>) {
                compile_node(*n.lhs, vocabulary, code);
                compile_node(*n.rhs, vocabulary, code);
                op.code = Op::Code::gate;
                op.compare = n.op;
            } else {
                for (const auto& v : n.variables) {
                    Op push{};
                    push.code = Op::Code::variable;
                    push.slot = slot_of(v);
                    code.push_back(push);
                }
                op.code = Op::Code::norm;
                op.slot = n.variables.size();
            }
            code.push_back(op);
        },
        e.node);
}

}  // namespace

CompiledReward::CompiledReward(const RewardExpr& expr, std::span<const std::string> vocabulary) {
    for (const auto& c : expr.components) {
        names_.push_back(c.name);
        std::vector<Op> code;
        compile_node(*c.expr, vocabulary, code);
        components_.push_back(std::move(code));
    }
}

double CompiledReward::evaluate(std::span<const double> values, std::span<double> out) const {
    std::vector<double> stack;
    stack.reserve(16);
    double total = 0.0;
    for (std::size_t i = 0; i < components_.size(); ++i) {
        stack.clear();
        for (const Op& op : components_[i]) {
            switch (op.code) {
                case Op::Code::constant: stack.push_back(op.value); break;
                case Op::Code::variable: stack.push_back(saturate(values[op.slot])); break;
                case Op::Code::unary: stack.back() = apply_unary(op.unary, stack.back()); break;
                case Op::Code::binary: {
                    const double b = stack.back();
                    stack.pop_back();
                    stack.back() = apply_binary(op.binary, stack.back(), b);
                    break;
                }
                case Op::Code::gate: {
                    const double b = stack.back();
                    stack.pop_back();
                    stack.back() = apply_gate(op.compare, stack.back(), b);
                    break;
                }
                case Op::Code::norm: {
                    const double v = norm_of(std::span<const double>(stack).last(op.slot));
                    stack.resize(stack.size() - op.slot);
                    stack.push_back(v);
                    break;
                }
            }
        }
        out[i] = stack.back();
        total += stack.back();
    }
    return total;
}

}  // namespace rfsearch::dsl
