#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "rfsearch/errors.hpp"

/// A small expression language for reward programs:
///
///   component <name> = <expr>;   (repeated; total reward = sum of components)
///
/// Expressions support + - * /, unary minus, abs/exp/tanh, min/max,
/// norm(v1, v2, ...) over variables and indicator(a < b) / indicator(a > b)
/// gates. `#` starts a comment. Evaluation never traps: every intermediate
/// value saturates at +-kSentinel and NaN collapses to 0.
namespace rfsearch::dsl {

inline constexpr double kSentinel = 1e6;

enum class UnaryOp { negate, abs, exp, tanh };
enum class BinaryOp { add, sub, mul, div, min, max };
enum class CompareOp { less, greater };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Constant {
    double value = 0.0;
};
struct Variable {
    std::string name;
};
struct Unary {
    UnaryOp op;
    ExprPtr operand;
};
struct Binary {
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
};
struct Gate {
    CompareOp op;
    ExprPtr lhs;
    ExprPtr rhs;
};
struct Norm {
    std::vector<std::string> variables;
};

struct Expr {
    std::variant<Constant, Variable, Unary, Binary, Gate, Norm> node;
};

ExprPtr make_constant(double value);
ExprPtr make_variable(std::string name);
ExprPtr make_unary(UnaryOp op, ExprPtr operand);
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_gate(CompareOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_norm(std::vector<std::string> variables);

bool structurally_equal(const Expr& a, const Expr& b);

struct Component {
    std::string name;
    ExprPtr expr;
};

struct RewardExpr {
    std::vector<Component> components;
};

bool structurally_equal(const RewardExpr& a, const RewardExpr& b);

/// Variables an expression references, in first-use order.
std::vector<std::string> referenced_variables(const RewardExpr& expr);

/// Base of parse and validation failures. `traceback()` is the text handed
/// to the repair loop.
class DslError : public Error {
public:
    DslError(std::string kind, std::string detail, int line, int column);
    const std::string& kind() const { return kind_; }
    const std::string& detail() const { return detail_; }
    int line() const { return line_; }
    int column() const { return column_; }
    std::string traceback() const;

private:
    std::string kind_;
    std::string detail_;
    int line_;
    int column_;
};

class SyntaxError : public DslError {
public:
    SyntaxError(std::string detail, int line, int column);
};

class UnknownVariable : public DslError {
public:
    UnknownVariable(std::string name, int line, int column);
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

/// Parses `source`. When `vocabulary` is non-empty every variable reference
/// must name one of its entries.
RewardExpr parse(std::string_view source, std::span<const std::string> vocabulary = {});

/// Canonical text; parse(pretty_print(e)) is structurally equal to e.
std::string pretty_print(const RewardExpr& expr);
std::string pretty_print(const Expr& expr);

/// Shortest round-trip rendering of a constant, always containing '.' or an
/// exponent (5 -> "5.0").
std::string format_constant(double value);

struct Evaluation {
    double total = 0.0;
    /// Component values in declaration order.
    std::vector<std::pair<std::string, double>> components;
};

using Bindings = std::map<std::string, double, std::less<>>;

/// Evaluates every component; total is their sum. Throws MissingBinding.
Evaluation evaluate(const RewardExpr& expr, const Bindings& bindings);

/// A reward expression with variables resolved to slots of a fixed
/// vocabulary, for evaluation in tight loops.
class CompiledReward {
public:
    CompiledReward(const RewardExpr& expr, std::span<const std::string> vocabulary);

    std::size_t component_count() const { return components_.size(); }
    const std::string& component_name(std::size_t i) const { return names_[i]; }

    /// Writes each component value into `out` (sized component_count()) and
    /// returns the total.
    double evaluate(std::span<const double> values, std::span<double> out) const;

private:
    struct Op {
        enum class Code { constant, variable, unary, binary, gate, norm } code;
        double value = 0.0;
        std::size_t slot = 0;
        UnaryOp unary = UnaryOp::negate;
        BinaryOp binary = BinaryOp::add;
        CompareOp compare = CompareOp::less;
    };
    std::vector<std::string> names_;
    std::vector<std::vector<Op>> components_;
};

double saturate(double value);

}  // namespace rfsearch::dsl
