#include "cfunnel/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <numbers>

namespace cfunnel {

namespace {

constexpr const char* kFunctions[] = {"sin", "cos", "exp", "ln", "sqrt", "tanh"};

bool is_function_name(const std::string& s) {
    return std::any_of(std::begin(kFunctions), std::end(kFunctions),
                       [&](const char* f) { return s == f; });
}

Op function_op(const std::string& s) {
    if (s == "sin") return Op::Sin;
    if (s == "cos") return Op::Cos;
    if (s == "exp") return Op::Exp;
    if (s == "ln") return Op::Ln;
    if (s == "sqrt") return Op::Sqrt;
    return Op::Tanh;
}

const char* function_name(Op op) {
    switch (op) {
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Exp: return "exp";
        case Op::Ln: return "ln";
        case Op::Sqrt: return "sqrt";
        case Op::Tanh: return "tanh";
        default: return "?";
    }
}

bool is_binary(Op op) {
    return op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div;
}

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
    Tok kind;
    std::string text;
    std::size_t pos;
};

std::vector<Token> lex(const std::string& s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
            if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
                if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
                    i = j;
                    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
                }
            }
            out.push_back({Tok::Number, s.substr(start, i - start), start});
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
            out.push_back({Tok::Ident, s.substr(start, i - start), start});
            continue;
        }
        Tok k;
        switch (c) {
            case '+': k = Tok::Plus; break;
            case '-': k = Tok::Minus; break;
            case '*': k = Tok::Star; break;
            case '/': k = Tok::Slash; break;
            case '^': k = Tok::Caret; break;
            case '(': k = Tok::LParen; break;
            case ')': k = Tok::RParen; break;
            case ',': k = Tok::Comma; break;
            default:
                throw ExprError(ExprError::Kind::Lex,
                                "unexpected character '" + std::string(1, c) + "' at position " +
                                    std::to_string(i),
                                i);
        }
        out.push_back({k, std::string(1, c), i});
        ++i;
    }
    out.push_back({Tok::End, "", s.size()});
    return out;
}

// ---------------------------------------------------------------------------
// Parser (no simplification: the tree mirrors the text)

NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

NodePtr raw_binary(Op op, NodePtr a, NodePtr b) {
    Node n;
    n.op = op;
    n.lhs = std::move(a);
    n.rhs = std::move(b);
    return make(std::move(n));
}

NodePtr raw_unary(Op op, NodePtr a) {
    Node n;
    n.op = op;
    n.lhs = std::move(a);
    return make(std::move(n));
}

NodePtr raw_pow(NodePtr a, int k) {
    Node n;
    n.op = Op::Pow;
    n.exponent = k;
    n.lhs = std::move(a);
    return make(std::move(n));
}

class Parser {
public:
    Parser(const std::string& text, const std::vector<std::string>& vars)
        : tokens_(lex(text)), vars_(vars) {}

    NodePtr parse() {
        if (tokens_.front().kind == Tok::End) {
            throw ExprError(ExprError::Kind::Syntax, "empty expression", 0);
        }
        NodePtr e = expression();
        if (peek().kind != Tok::End) {
            fail("unexpected '" + peek().text + "'");
        }
        return e;
    }

private:
    const Token& peek() const { return tokens_[pos_]; }
    const Token& next() { return tokens_[pos_++]; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ExprError(ExprError::Kind::Syntax,
                        msg + " at position " + std::to_string(peek().pos), peek().pos);
    }

    void expect(Tok k, const char* what) {
        if (peek().kind != k) fail(std::string("expected ") + what);
        ++pos_;
    }

    NodePtr expression() {
        NodePtr lhs = term();
        while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
            const Op op = next().kind == Tok::Plus ? Op::Add : Op::Sub;
            lhs = raw_binary(op, lhs, term());
        }
        return lhs;
    }

    NodePtr term() {
        NodePtr lhs = unary();
        while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
            const Op op = next().kind == Tok::Star ? Op::Mul : Op::Div;
            lhs = raw_binary(op, lhs, unary());
        }
        return lhs;
    }

    NodePtr unary() {
        if (peek().kind == Tok::Minus) {
            ++pos_;
            return raw_unary(Op::Neg, unary());
        }
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        while (peek().kind == Tok::Caret) {
            ++pos_;
            const Token& t = peek();
            if (t.kind != Tok::Number ||
                t.text.find_first_not_of("0123456789") != std::string::npos) {
                throw ExprError(ExprError::Kind::NonIntegerExponent,
                                "exponent must be a non-negative integer literal at position " +
                                    std::to_string(t.pos),
                                t.pos);
            }
            int k = 0;
            auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), k);
            if (ec != std::errc()) {
                throw ExprError(ExprError::Kind::NonIntegerExponent,
                                "exponent out of range at position " + std::to_string(t.pos), t.pos);
            }
            ++pos_;
            base = raw_pow(base, k);
        }
        return base;
    }

    NodePtr primary() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Number: {
                ++pos_;
                double v = 0.0;
                auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
                if (ec != std::errc() || p != t.text.data() + t.text.size()) {
                    throw ExprError(ExprError::Kind::Lex,
                                    "malformed number '" + t.text + "' at position " +
                                        std::to_string(t.pos),
                                    t.pos);
                }
                Node n;
                n.op = Op::Constant;
                n.value = v;
                return make(std::move(n));
            }
            case Tok::LParen: {
                ++pos_;
                NodePtr e = expression();
                expect(Tok::RParen, "')'");
                return e;
            }
            case Tok::Ident:
                return identifier();
            default:
                fail(t.kind == Tok::End ? "unexpected end of input" : "unexpected '" + t.text + "'");
        }
    }

    NodePtr identifier() {
        const Token t = next();
        if (peek().kind == Tok::LParen) {
            if (!is_function_name(t.text)) {
                throw ExprError(ExprError::Kind::UnknownIdentifier,
                                "unknown function '" + t.text + "'", t.pos);
            }
            ++pos_;
            std::vector<NodePtr> args;
            if (peek().kind != Tok::RParen) {
                args.push_back(expression());
                while (peek().kind == Tok::Comma) {
                    ++pos_;
                    args.push_back(expression());
                }
            }
            expect(Tok::RParen, "')'");
            if (args.size() != 1) {
                throw ExprError(ExprError::Kind::Arity,
                                "function '" + t.text + "' takes 1 argument, got " +
                                    std::to_string(args.size()),
                                t.pos);
            }
            return raw_unary(function_op(t.text), args.front());
        }
        auto it = std::find(vars_.begin(), vars_.end(), t.text);
        if (it != vars_.end()) {
            Node n;
            n.op = Op::Variable;
            n.slot = static_cast<std::size_t>(it - vars_.begin());
            n.name = t.text;
            return make(std::move(n));
        }
        if (t.text == "pi" || t.text == "e") {
            Node n;
            n.op = Op::Constant;
            n.value = t.text == "pi" ? std::numbers::pi : std::numbers::e;
            n.name = t.text;
            return make(std::move(n));
        }
        if (is_function_name(t.text)) {
            throw ExprError(ExprError::Kind::Arity, "function '" + t.text + "' requires an argument",
                            t.pos);
        }
        throw ExprError(ExprError::Kind::UnknownIdentifier, "unknown identifier '" + t.text + "'",
                        t.pos);
    }

    std::vector<Token> tokens_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Printing

int precedence(const Node& n) {
    switch (n.op) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        case Op::Pow: return 4;
        case Op::Constant: return (n.value < 0 || std::signbit(n.value)) && n.name.empty() ? 3 : 5;
        default: return 5;
    }
}

std::string format_number(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

void print(const Node& n, std::string& out);

void print_child(const Node& child, int min_prec, std::string& out) {
    if (precedence(child) < min_prec) {
        out += '(';
        print(child, out);
        out += ')';
    } else {
        print(child, out);
    }
}

void print(const Node& n, std::string& out) {
    switch (n.op) {
        case Op::Constant:
            out += n.name.empty() ? format_number(n.value) : n.name;
            return;
        case Op::Variable:
            out += n.name;
            return;
        case Op::Neg:
            out += '-';
            print_child(*n.lhs, 3, out);
            return;
        case Op::Pow:
            print_child(*n.lhs, 5, out);
            out += '^';
            out += std::to_string(n.exponent);
            return;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div: {
            const int p = precedence(n);
            print_child(*n.lhs, p, out);
            out += n.op == Op::Add ? "+" : n.op == Op::Sub ? "-" : n.op == Op::Mul ? "*" : "/";
            print_child(*n.rhs, p + 1, out);
            return;
        }
        default:
            out += function_name(n.op);
            out += '(';
            print(*n.lhs, out);
            out += ')';
            return;
    }
}

// ---------------------------------------------------------------------------
// Evaluation

double ipow(double base, int k) {
    double result = 1.0;
    while (k > 0) {
        if (k & 1) result *= base;
        base *= base;
        k >>= 1;
    }
    return result;
}

std::string node_text(const Node& n) {
    std::string s;
    print(n, s);
    return s;
}

[[noreturn]] void domain_error(const Node& n, const std::string& why) {
    throw ExprError(ExprError::Kind::Domain, why + " in '" + node_text(n) + "'");
}

double eval_node(const Node& n, std::span<const double> values) {
    switch (n.op) {
        case Op::Constant: return n.value;
        case Op::Variable: return values[n.slot];
        case Op::Neg: return -eval_node(*n.lhs, values);
        case Op::Sin: return std::sin(eval_node(*n.lhs, values));
        case Op::Cos: return std::cos(eval_node(*n.lhs, values));
        case Op::Exp: return std::exp(eval_node(*n.lhs, values));
        case Op::Tanh: return std::tanh(eval_node(*n.lhs, values));
        case Op::Ln: {
            const double a = eval_node(*n.lhs, values);
            if (!(a > 0.0)) domain_error(n, "logarithm of non-positive value");
            return std::log(a);
        }
        case Op::Sqrt: {
            const double a = eval_node(*n.lhs, values);
            if (a < 0.0) domain_error(n, "square root of negative value");
            return std::sqrt(a);
        }
        case Op::Add: return eval_node(*n.lhs, values) + eval_node(*n.rhs, values);
        case Op::Sub: return eval_node(*n.lhs, values) - eval_node(*n.rhs, values);
        case Op::Mul: return eval_node(*n.lhs, values) * eval_node(*n.rhs, values);
        case Op::Div: {
            const double a = eval_node(*n.lhs, values);
            const double b = eval_node(*n.rhs, values);
            if (b == 0.0) domain_error(n, "division by zero");
            return a / b;
        }
        case Op::Pow: return ipow(eval_node(*n.lhs, values), n.exponent);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Simplification / differentiation

bool is_const(const NodePtr& n) { return n->op == Op::Constant; }
bool is_const(const NodePtr& n, double v) { return n->op == Op::Constant && n->value == v; }

NodePtr simplify_node(const NodePtr& n) {
    switch (n->op) {
        case Op::Constant:
        case Op::Variable: return n;
        case Op::Pow: return build::pow(simplify_node(n->lhs), n->exponent);
        case Op::Add: return build::add(simplify_node(n->lhs), simplify_node(n->rhs));
        case Op::Sub: return build::sub(simplify_node(n->lhs), simplify_node(n->rhs));
        case Op::Mul: return build::mul(simplify_node(n->lhs), simplify_node(n->rhs));
        case Op::Div: return build::div(simplify_node(n->lhs), simplify_node(n->rhs));
        default: return build::unary(n->op, simplify_node(n->lhs));
    }
}

NodePtr diff_node(const NodePtr& n, std::size_t slot) {
    using namespace build;
    const NodePtr& a = n->lhs;
    switch (n->op) {
        case Op::Constant: return constant(0.0);
        case Op::Variable: return constant(n->slot == slot ? 1.0 : 0.0);
        case Op::Neg: return neg(diff_node(a, slot));
        case Op::Sin: return mul(unary(Op::Cos, simplify_node(a)), diff_node(a, slot));
        case Op::Cos: return mul(neg(unary(Op::Sin, simplify_node(a))), diff_node(a, slot));
        case Op::Exp: return mul(unary(Op::Exp, simplify_node(a)), diff_node(a, slot));
        case Op::Ln: return div(diff_node(a, slot), simplify_node(a));
        case Op::Sqrt:
            return div(diff_node(a, slot), mul(constant(2.0), unary(Op::Sqrt, simplify_node(a))));
        case Op::Tanh:
            return mul(sub(constant(1.0), pow(unary(Op::Tanh, simplify_node(a)), 2)),
                       diff_node(a, slot));
        case Op::Add: return add(diff_node(a, slot), diff_node(n->rhs, slot));
        case Op::Sub: return sub(diff_node(a, slot), diff_node(n->rhs, slot));
        case Op::Mul: {
            const NodePtr sa = simplify_node(a);
            const NodePtr sb = simplify_node(n->rhs);
            return add(mul(diff_node(a, slot), sb), mul(sa, diff_node(n->rhs, slot)));
        }
        case Op::Div: {
            const NodePtr sa = simplify_node(a);
            const NodePtr sb = simplify_node(n->rhs);
            return div(sub(mul(diff_node(a, slot), sb), mul(sa, diff_node(n->rhs, slot))),
                       pow(sb, 2));
        }
        case Op::Pow: {
            if (n->exponent == 0) return constant(0.0);
            return mul(mul(constant(static_cast<double>(n->exponent)),
                           pow(simplify_node(a), n->exponent - 1)),
                       diff_node(a, slot));
        }
    }
    return constant(0.0);
}

bool equal_nodes(const Node& a, const Node& b) {
    if (a.op != b.op) return false;
    switch (a.op) {
        case Op::Constant: return std::memcmp(&a.value, &b.value, sizeof(double)) == 0;
        case Op::Variable: return a.slot == b.slot && a.name == b.name;
        case Op::Pow: return a.exponent == b.exponent && equal_nodes(*a.lhs, *b.lhs);
        default:
            if (is_binary(a.op)) return equal_nodes(*a.lhs, *b.lhs) && equal_nodes(*a.rhs, *b.rhs);
            return equal_nodes(*a.lhs, *b.lhs);
    }
}

bool depends(const Node& n, std::size_t slot) {
    switch (n.op) {
        case Op::Constant: return false;
        case Op::Variable: return n.slot == slot;
        default:
            if (is_binary(n.op)) return depends(*n.lhs, slot) || depends(*n.rhs, slot);
            return depends(*n.lhs, slot);
    }
}

bool has_variables(const Node& n) {
    switch (n.op) {
        case Op::Constant: return false;
        case Op::Variable: return true;
        default:
            if (is_binary(n.op)) return has_variables(*n.lhs) || has_variables(*n.rhs);
            return has_variables(*n.lhs);
    }
}

std::size_t count(const Node& n) {
    switch (n.op) {
        case Op::Constant:
        case Op::Variable: return 1;
        default:
            if (is_binary(n.op)) return 1 + count(*n.lhs) + count(*n.rhs);
            return 1 + count(*n.lhs);
    }
}

}  // namespace

// ---------------------------------------------------------------------------

namespace build {

NodePtr constant(double v) {
    Node n;
    n.op = Op::Constant;
    n.value = v;
    return make(std::move(n));
}

NodePtr variable(std::size_t slot, std::string name) {
    Node n;
    n.op = Op::Variable;
    n.slot = slot;
    n.name = std::move(name);
    return make(std::move(n));
}

NodePtr unary(Op op, NodePtr a) {
    if (op == Op::Neg) return neg(std::move(a));
    if (is_const(a)) {
        const double v = a->value;
        switch (op) {
            case Op::Sin: return constant(std::sin(v));
            case Op::Cos: return constant(std::cos(v));
            case Op::Exp: return constant(std::exp(v));
            case Op::Tanh: return constant(std::tanh(v));
            case Op::Ln:
                if (v > 0.0) return constant(std::log(v));
                break;
            case Op::Sqrt:
                if (v >= 0.0) return constant(std::sqrt(v));
                break;
            default: break;
        }
    }
    return raw_unary(op, std::move(a));
}

NodePtr neg(NodePtr a) {
    if (is_const(a)) return constant(-a->value);
    if (a->op == Op::Neg) return a->lhs;
    return raw_unary(Op::Neg, std::move(a));
}

NodePtr add(NodePtr a, NodePtr b) {
    if (is_const(a) && is_const(b)) return constant(a->value + b->value);
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    return raw_binary(Op::Add, std::move(a), std::move(b));
}

NodePtr sub(NodePtr a, NodePtr b) {
    if (is_const(a) && is_const(b)) return constant(a->value - b->value);
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return neg(std::move(b));
    return raw_binary(Op::Sub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
    if (is_const(a) && is_const(b)) return constant(a->value * b->value);
    if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
    if (is_const(b)) std::swap(a, b);  // constants to the left
    if (is_const(a, 1.0)) return b;
    if (is_const(a, -1.0)) return neg(std::move(b));
    if (is_const(a) && b->op == Op::Mul && is_const(b->lhs)) {
        return mul(constant(a->value * b->lhs->value), b->rhs);
    }
    return raw_binary(Op::Mul, std::move(a), std::move(b));
}

NodePtr div(NodePtr a, NodePtr b) {
    if (is_const(a) && is_const(b) && b->value != 0.0) return constant(a->value / b->value);
    if (is_const(b, 1.0)) return a;
    if (is_const(a, 0.0) && !is_const(b, 0.0)) return constant(0.0);
    return raw_binary(Op::Div, std::move(a), std::move(b));
}

NodePtr pow(NodePtr a, int exponent) {
    if (exponent == 0) return constant(1.0);
    if (exponent == 1) return a;
    if (is_const(a)) return constant(ipow(a->value, exponent));
    if (a->op == Op::Pow) return pow(a->lhs, a->exponent * exponent);
    return raw_pow(std::move(a), exponent);
}

}  // namespace build

// ---------------------------------------------------------------------------

Expr::Expr() : Expr(build::constant(0.0), std::make_shared<const std::vector<std::string>>()) {}

Expr::Expr(NodePtr root, std::shared_ptr<const std::vector<std::string>> vars)
    : root_(std::move(root)), vars_(std::move(vars)) {}

Expr Expr::constant(double v, std::shared_ptr<const std::vector<std::string>> vars) {
    return Expr(build::constant(v), std::move(vars));
}

double Expr::eval(std::span<const double> values) const {
    if (values.size() < vars_->size()) {
        throw std::invalid_argument("Expr::eval: expected " + std::to_string(vars_->size()) +
                                    " values, got " + std::to_string(values.size()));
    }
    return eval_node(*root_, values);
}

double Expr::eval(const Bindings& bindings) const {
    std::vector<double> values(vars_->size(), 0.0);
    for (std::size_t i = 0; i < vars_->size(); ++i) {
        auto it = bindings.find((*vars_)[i]);
        if (it != bindings.end()) {
            values[i] = it->second;
        } else if (depends(*root_, i)) {
            throw ExprError(ExprError::Kind::UnknownIdentifier,
                            "variable '" + (*vars_)[i] + "' is not bound");
        }
    }
    return eval_node(*root_, values);
}

bool Expr::depends_on(std::size_t slot) const { return depends(*root_, slot); }

bool Expr::is_constant() const { return !has_variables(*root_); }

std::size_t Expr::node_count() const { return count(*root_); }

std::string Expr::to_string() const { return node_text(*root_); }

Expr parse(const std::string& text, std::shared_ptr<const std::vector<std::string>> vars) {
    for (const auto& v : *vars) {
        if (v == "pi" || v == "e" || is_function_name(v)) {
            throw ExprError(ExprError::Kind::UnknownIdentifier,
                            "'" + v + "' is reserved and cannot name a variable");
        }
    }
    Parser p(text, *vars);
    return Expr(p.parse(), std::move(vars));
}

Expr parse(const std::string& text, const std::vector<std::string>& var_names) {
    return parse(text, std::make_shared<const std::vector<std::string>>(var_names));
}

Expr simplify(const Expr& e) { return Expr(simplify_node(e.root_ptr()), e.variable_table()); }

Expr differentiate(const Expr& e, std::size_t slot) {
    return Expr(diff_node(e.root_ptr(), slot), e.variable_table());
}

Expr differentiate(const Expr& e, const std::string& var) {
    const auto& vars = e.variables();
    auto it = std::find(vars.begin(), vars.end(), var);
    if (it == vars.end()) {
        throw ExprError(ExprError::Kind::UnknownIdentifier, "unknown variable '" + var + "'");
    }
    return differentiate(e, static_cast<std::size_t>(it - vars.begin()));
}

bool structurally_equal(const Expr& a, const Expr& b) { return equal_nodes(a.root(), b.root()); }

}  // namespace cfunnel
