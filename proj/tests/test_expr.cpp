#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cfunnel/expr.hpp"
#include "random_expr.hpp"

using namespace cfunnel;

namespace {
const std::vector<std::string> kVars = {"x1", "x2", "t"};
}

TEST_CASE("parse: single variable") {
    const Expr e = parse("x1", kVars);
    CHECK(e.root().op == Op::Variable);
    CHECK(e.root().slot == 0);
    CHECK(e.node_count() == 1);
}

TEST_CASE("parse: output map h3") {
    const Expr e = parse("0.3*x1^2 + x2", kVars);
    const Node& r = e.root();
    REQUIRE(r.op == Op::Add);
    REQUIRE(r.lhs->op == Op::Mul);
    CHECK(r.lhs->lhs->op == Op::Constant);
    CHECK(r.lhs->lhs->value == 0.3);
    CHECK(r.lhs->rhs->op == Op::Pow);
    CHECK(r.lhs->rhs->exponent == 2);
    CHECK(r.lhs->rhs->lhs->slot == 0);
    CHECK(r.rhs->op == Op::Variable);
    CHECK(r.rhs->slot == 1);
}

TEST_CASE("parse: disturbance is a function of t only") {
    const Expr e = parse("1.5*sin(2*t+pi/3)+3*cos(3*t+3*pi/7)", kVars);
    CHECK_FALSE(e.depends_on(0));
    CHECK_FALSE(e.depends_on(1));
    CHECK(e.depends_on(2));
    const double t = 0.7;
    CHECK(e.eval(Bindings{{"t", t}}) ==
          doctest::Approx(1.5 * std::sin(2 * t + M_PI / 3) + 3 * std::cos(3 * t + 3 * M_PI / 7))
              .epsilon(1e-15));
}

TEST_CASE("eval examples") {
    CHECK(parse("x1", kVars).eval(Bindings{{"x1", 2.0}}) == 2.0);
    CHECK(parse("0.3*x1^2 + x2", kVars).eval(Bindings{{"x1", 2.0}, {"x2", -2.5}}) ==
          doctest::Approx(-1.3).epsilon(1e-15));
    CHECK(parse("sin(t)", kVars).eval(Bindings{{"t", 0.0}}) == 0.0);
}

TEST_CASE("precedence and associativity") {
    auto v = [](const char* s) { return parse(s, kVars).eval(Bindings{{"x1", 3.0}}); };
    CHECK(v("2 + 3*4") == 14.0);
    CHECK(v("-x1^2") == -9.0);
    CHECK(v("10 - 4 - 3") == 3.0);
    CHECK(v("12 / 3 / 2") == 2.0);
    // Exponents are integer literals, so chained powers group to the left.
    CHECK(v("2^3^2") == 64.0);
    CHECK(v("(1 + 2)*(3 - 1)") == 6.0);
    CHECK(v("x1^0") == 1.0);
}

TEST_CASE("parse errors carry a kind") {
    auto kind = [](const char* s) {
        try {
            parse(s, kVars);
        } catch (const ExprError& e) {
            return e.kind();
        }
        FAIL("no error for " << s);
        return ExprError::Kind::Lex;
    };
    CHECK(kind("x1 + $") == ExprError::Kind::Lex);
    CHECK(kind("x1 +") == ExprError::Kind::Syntax);
    CHECK(kind("(x1") == ExprError::Kind::Syntax);
    CHECK(kind("x3") == ExprError::Kind::UnknownIdentifier);
    CHECK(kind("foo(x1)") == ExprError::Kind::UnknownIdentifier);
    CHECK(kind("x1^1.5") == ExprError::Kind::NonIntegerExponent);
    CHECK(kind("x1^x2") == ExprError::Kind::NonIntegerExponent);
    CHECK(kind("sin(x1, x2)") == ExprError::Kind::Arity);
    CHECK_THROWS_AS(parse("x1", std::vector<std::string>{"pi"}), ExprError);
}

TEST_CASE("domain errors at evaluation") {
    CHECK_THROWS_AS(parse("ln(x1)", kVars).eval(Bindings{{"x1", 0.0}}), ExprError);
    CHECK_THROWS_AS(parse("sqrt(x1)", kVars).eval(Bindings{{"x1", -1.0}}), ExprError);
    CHECK_THROWS_AS(parse("1/x1", kVars).eval(Bindings{{"x1", 0.0}}), ExprError);
    CHECK_THROWS_AS(parse("x1 + x2", kVars).eval(Bindings{{"x1", 0.0}}), ExprError);
}

TEST_CASE("derivative examples") {
    CHECK(differentiate(parse("0.3*x1^2 + x2", kVars), "x1").to_string() == "0.6*x1");
    CHECK(differentiate(parse("x2 - x1", kVars), "x2").to_string() == "1");
    CHECK(differentiate(parse("x2 - x1", kVars), "x1").to_string() == "-1");
    CHECK(differentiate(parse("sin(t)", kVars), "x1").is_constant());
}

TEST_CASE("derivative of random trees matches central differences") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int checked = 0;
    for (int k = 0; k < 100; ++k) {
        const Expr e = parse(testing::random_expr(rng, 4), kVars);
        std::vector<double> p = {u(rng), u(rng), u(rng)};
        for (std::size_t slot = 0; slot < 3; ++slot) {
            const Expr d = differentiate(e, slot);
            const double h = 1e-6;
            auto q = p;
            q[slot] = p[slot] + h;
            const double fp = e.eval(q);
            q[slot] = p[slot] - h;
            const double fm = e.eval(q);
            const double fd = (fp - fm) / (2 * h);
            const double an = d.eval(p);
            INFO(e.to_string(), " d/d", kVars[slot], " = ", d.to_string());
            CHECK(std::abs(an - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
            ++checked;
        }
    }
    CHECK(checked == 300);
}

TEST_CASE("derivatives of deep random trees on [-3, 3]") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::uniform_int_distribution<int> depth(1, 6);
    std::uniform_int_distribution<std::size_t> var(0, 2);
    int bad = 0;
    for (int k = 0; k < 1000; ++k) {
        const Expr e = parse(testing::random_expr(rng, depth(rng)), kVars);
        const std::size_t slot = var(rng);
        std::vector<double> p = {u(rng), u(rng), u(rng)};
        double err = 0.0;
        const double fd = testing::ridders(
            [&](double v) {
                auto q = p;
                q[slot] = v;
                return e.eval(q);
            },
            p[slot], &err);
        const double an = differentiate(e, slot).eval(p);
        if (!(std::abs(an - fd) / std::max(1.0, std::abs(fd)) < 1e-5)) {
            ++bad;
            MESSAGE(e.to_string(), " at slot ", slot, ": ", an, " vs ", fd);
        }
    }
    CHECK(bad == 0);
}

TEST_CASE("differentiation is linear node-for-node") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 200; ++k) {
        const Expr a = parse(testing::random_expr(rng, 3), kVars);
        const Expr b = parse(testing::random_expr(rng, 3), kVars);
        const Expr sum(build::add(a.root_ptr(), b.root_ptr()), a.variable_table());
        for (std::size_t slot = 0; slot < 3; ++slot) {
            const Expr lhs = differentiate(sum, slot);
            const Expr rhs(build::add(differentiate(a, slot).root_ptr(),
                                      differentiate(b, slot).root_ptr()),
                           a.variable_table());
            INFO(a.to_string(), " | ", b.to_string());
            CHECK(structurally_equal(lhs, rhs));
        }
    }
}

TEST_CASE("corpus expressions: parse(print(parse(s))) is structurally equal") {
    const char* corpus[] = {
        "-x1^2*x2 - x1^3 - exp(-x1^2 - x2^2)",
        "0.1*x2^2 + x1^2 + sin(x1*x2)",
        "x2^2 + 1", "cos(x1)", "sin(x2)", "x1^2 + 2",
        "1.5*sin(2*t + pi/3) + 3*cos(3*t + 3*pi/7)",
        "0.5*sin(3*t)*exp(cos(2*t + pi/3) + 1)",
        "x1", "-2 + 2.5*sin(0.3*t)", "3*sin(0.3*t)", "x2 - x1", "-cos(0.3*t)",
        "0.3*x1^2 + x2", "3.5 - cos(0.3*t)", "0.3*x1^2 - x2", "-3", "ln(1 + x1^2)/sqrt(2 + t)",
        "tanh(x1 - x2)^4", "e^2 - -x1",
    };
    for (const char* s : corpus) {
        const Expr e = parse(s, kVars);
        INFO(s, " -> ", e.to_string());
        CHECK(structurally_equal(parse(e.to_string(), kVars), e));
    }
}

TEST_CASE("differentiation is linear") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const std::string a = testing::random_expr(rng, 3), b = testing::random_expr(rng, 3);
        const Expr sum = parse("2*(" + a + ") - 3*(" + b + ")", kVars);
        const Expr da = differentiate(parse(a, kVars), "x2");
        const Expr db = differentiate(parse(b, kVars), "x2");
        const Expr ds = differentiate(sum, "x2");
        std::vector<double> p = {u(rng), u(rng), u(rng)};
        const double expect = 2 * da.eval(p) - 3 * db.eval(p);
        CHECK(ds.eval(p) == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("printing round-trips") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const Expr e = parse(testing::random_expr(rng, 4), kVars);
        const std::string text = e.to_string();
        const Expr back = parse(text, kVars);
        INFO(text);
        CHECK(back.to_string() == text);
        std::vector<double> p = {u(rng), u(rng), u(rng)};
        CHECK(back.eval(p) == e.eval(p));
        // Derivatives print and re-parse too.
        const Expr d = differentiate(e, "x1");
        CHECK(parse(d.to_string(), kVars).eval(p) == d.eval(p));
    }
}

TEST_CASE("named constants print by name") {
    const Expr e = parse("3*pi/7 + e", kVars);
    CHECK(e.to_string().find("pi") != std::string::npos);
    CHECK(e.eval(Bindings{}) == doctest::Approx(3 * M_PI / 7 + M_E).epsilon(1e-15));
}

TEST_CASE("simplify folds constants and identities") {
    CHECK(simplify(parse("0*x1 + 1*x2 - 0", kVars)).to_string() == "x2");
    CHECK(simplify(parse("2*(3*x1)", kVars)).to_string() == "6*x1");
    CHECK(simplify(parse("(x1^2)^3", kVars)).to_string() == "x1^6");
    CHECK(simplify(parse("--x1", kVars)).to_string() == "x1");
    CHECK(simplify(parse("x1/1 + 0/x2", kVars)).to_string() == "x1");
    CHECK(structurally_equal(simplify(parse("x1 + 0", kVars)), parse("x1", kVars)));
}
