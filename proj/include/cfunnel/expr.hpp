#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfunnel {

/// Error raised by the expression parser and evaluator.
class ExprError : public std::runtime_error {
public:
    enum class Kind { Lex, Syntax, UnknownIdentifier, Arity, NonIntegerExponent, Domain };

    ExprError(Kind kind, const std::string& what, std::size_t position = 0)
        : std::runtime_error(what), kind_(kind), position_(position) {}

    Kind kind() const { return kind_; }
    /// Character offset into the source text (lex/syntax errors only).
    std::size_t position() const { return position_; }

private:
    Kind kind_;
    std::size_t position_;
};

enum class Op {
    Constant,
    Variable,
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Tanh,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Immutable expression tree node. Variables refer to a slot in the variable
/// table the expression was parsed against.
struct Node {
    Op op = Op::Constant;
    double value = 0.0;      // Constant
    std::size_t slot = 0;    // Variable
    std::string name;        // Variable; also "pi"/"e" for named constants
    int exponent = 0;        // Pow
    NodePtr lhs;             // unary operand or left operand
    NodePtr rhs;             // right operand of binary ops
};

using Bindings = std::map<std::string, double>;

/// A closed-form scalar expression over a fixed variable table.
///
/// Cheap to copy (shared immutable tree). Safe to evaluate concurrently.
class Expr {
public:
    Expr();
    Expr(NodePtr root, std::shared_ptr<const std::vector<std::string>> vars);

    static Expr constant(double v, std::shared_ptr<const std::vector<std::string>> vars);

    const Node& root() const { return *root_; }
    const NodePtr& root_ptr() const { return root_; }
    const std::vector<std::string>& variables() const { return *vars_; }
    const std::shared_ptr<const std::vector<std::string>>& variable_table() const { return vars_; }

    /// Evaluate with values laid out in variable-table order.
    double eval(std::span<const double> values) const;
    /// Evaluate with named bindings; every referenced variable must be bound.
    double eval(const Bindings& bindings) const;

    /// True if the tree references the variable in `slot`.
    bool depends_on(std::size_t slot) const;
    bool is_constant() const;

    std::size_t node_count() const;

    /// Re-parseable text using the same grammar the parser accepts.
    std::string to_string() const;

private:
    NodePtr root_;
    std::shared_ptr<const std::vector<std::string>> vars_;
};

/// Parse `text` against the declared variable names. The constants `pi` and
/// `e` are reserved and may not be used as variable names.
Expr parse(const std::string& text, const std::vector<std::string>& var_names);
Expr parse(const std::string& text, std::shared_ptr<const std::vector<std::string>> vars);

/// Constant folding and identity elimination.
Expr simplify(const Expr& e);

/// Exact symbolic derivative, simplified.
Expr differentiate(const Expr& e, const std::string& var);
Expr differentiate(const Expr& e, std::size_t slot);

/// Node-for-node equality; constants compare bitwise.
bool structurally_equal(const Expr& a, const Expr& b);

/// Smart constructors used by the simplifier and by modules that assemble
/// expressions (predicates, plants). Each applies the local simplification
/// rules, so results stay in normal form.
namespace build {
NodePtr constant(double v);
NodePtr variable(std::size_t slot, std::string name);
NodePtr unary(Op op, NodePtr a);
NodePtr add(NodePtr a, NodePtr b);
NodePtr sub(NodePtr a, NodePtr b);
NodePtr mul(NodePtr a, NodePtr b);
NodePtr div(NodePtr a, NodePtr b);
NodePtr pow(NodePtr a, int exponent);
NodePtr neg(NodePtr a);
}  // namespace build

}  // namespace cfunnel
