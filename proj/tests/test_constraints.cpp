#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cfunnel/constraints.hpp"
#include "fixtures.hpp"

using namespace cfunnel;
using testing::make;

TEST_CASE("flagship set constraints compile to four predicates") {
    const auto ps = testing::example1_snapshot();
    CHECK(ps->size() == 4);
    CHECK(ps->m() == 3);
    CHECK(ps->p() == 1);
    CHECK(ps->q() == 1);
    CHECK(ps->dim() == 2);
}

TEST_CASE("single UBO constraint gives upper - h") {
    const auto v = make_variable_table(2);
    const PredicateSet ps = compile({make(v, ConstraintKind::UpperBoundedOneSided, "x1*x2", nullptr, "1 + t")}, 2);
    REQUIRE(ps.size() == 1);
    Eigen::VectorXd x(2);
    x << 2.0, 3.0;
    CHECK(ps.values(0.5, x)[0] == doctest::Approx(1.5 - 6.0));
    CHECK(ps.predicates()[0].side == Side::Upper);
}

TEST_CASE("two-funnel set constraints: two funnels") {
    const auto ps = testing::example2();
    CHECK(ps->size() == 4);
    CHECK(ps->m() == 2);
    CHECK(ps->p() == 2);
    CHECK(ps->q() == 0);
}

TEST_CASE("snapshot predicate values at the origin") {
    const auto ps = testing::example1_snapshot();
    const Eigen::VectorXd psi = ps->values(0.0, Eigen::VectorXd::Zero(2));
    REQUIRE(psi.size() == 4);
    CHECK(psi[0] == 2.0);
    CHECK(psi[1] == 2.0);
    CHECK(psi[2] == 2.0);
    CHECK(psi[3] == 4.0);
}

TEST_CASE("funnel pair at the midpoint is symmetric") {
    const auto ps = testing::example1_timevarying();
    for (double t : {0.0, 1.3, 7.0, 15.5}) {
        const double lo = -2 + 2.5 * std::sin(0.3 * t), hi = 3 * std::sin(0.3 * t);
        Eigen::VectorXd x(2);
        x << 0.5 * (lo + hi), 0.7;
        const Eigen::VectorXd psi = ps->values(t, x);
        CHECK(psi[0] == doctest::Approx(0.5 * (hi - lo)).epsilon(1e-14));
        CHECK(psi[1] == doctest::Approx(0.5 * (hi - lo)).epsilon(1e-14));
    }
}

TEST_CASE("scenario start violates a constraint") {
    const auto ps = testing::example1_timevarying();
    Eigen::VectorXd x0(2);
    x0 << 2.0, -2.5;
    CHECK(ps->values(0.0, x0).minCoeff() < 0.0);
}

TEST_CASE("predicate order: funnels, then LBO, then UBO, whatever the input order") {
    const auto v = make_variable_table(2);
    const PredicateSet ps = compile({
        make(v, ConstraintKind::UpperBoundedOneSided, "x2", nullptr, "5"),
        make(v, ConstraintKind::LowerBoundedOneSided, "x1", "-5", nullptr),
        make(v, ConstraintKind::Funnel, "x1 + x2", "-1", "1"),
    }, 2);
    REQUIRE(ps.constraints().size() == 3);
    CHECK(ps.constraints()[0].kind == ConstraintKind::Funnel);
    CHECK(ps.constraints()[0].source_index == 2);
    CHECK(ps.constraints()[1].kind == ConstraintKind::LowerBoundedOneSided);
    CHECK(ps.constraints()[2].kind == ConstraintKind::UpperBoundedOneSided);
    Eigen::VectorXd x(2);
    x << 0.25, 0.5;
    const Eigen::VectorXd psi = ps.values(0.0, x);
    CHECK(psi[0] == doctest::Approx(0.75 + 1));
    CHECK(psi[1] == doctest::Approx(1 - 0.75));
    CHECK(psi[2] == doctest::Approx(0.25 + 5));
    CHECK(psi[3] == doctest::Approx(5 - 0.5));
}

TEST_CASE("symbolic gradients and time derivatives") {
    const auto ps = testing::example1_timevarying();
    Eigen::VectorXd x(2);
    x << 0.4, -1.1;
    const double t = 2.0;
    const Eigen::MatrixXd G = ps->gradients(t, x);
    CHECK(G(0, 0) == 1.0);
    CHECK(G(1, 0) == -1.0);
    CHECK(G(2, 0) == -1.0);
    CHECK(G(2, 1) == 1.0);
    CHECK(G(3, 0) == doctest::Approx(-0.6 * 0.4));
    CHECK(G(3, 1) == -1.0);
    const Eigen::VectorXd dt = ps->time_derivatives(t, x);
    CHECK(dt[0] == doctest::Approx(-0.75 * std::cos(0.3 * t)));
    CHECK(dt[1] == doctest::Approx(0.9 * std::cos(0.3 * t)));
    CHECK(dt[2] == doctest::Approx(-0.3 * std::sin(0.3 * t)));
    CHECK(dt[3] == doctest::Approx(0.3 * std::sin(0.3 * t)));
    const Eigen::MatrixXd J = ps->jacobian(x);
    CHECK(J.rows() == 3);
    CHECK(J(2, 0) == doctest::Approx(0.24));
}

TEST_CASE("validation errors") {
    const auto v = make_variable_table(2);
    CHECK_THROWS_AS(compile({}, 2), ConstraintError);
    CHECK_THROWS_AS(compile({make(v, ConstraintKind::Funnel, "x1 + t", "-1", "1")}, 2), ConstraintError);
    CHECK_THROWS_AS(compile({make(v, ConstraintKind::Funnel, "x1", "-1 + x2", "1")}, 2), ConstraintError);
    CHECK_THROWS_AS(compile({make(v, ConstraintKind::Funnel, "x1", nullptr, "1")}, 2), ConstraintError);
    CHECK_THROWS_AS(compile({make(v, ConstraintKind::LowerBoundedOneSided, "x1", nullptr, "1")}, 2), ConstraintError);
    CHECK_THROWS_AS(compile({make(v, ConstraintKind::UpperBoundedOneSided, "x1", "0", nullptr)}, 2), ConstraintError);
    // Bounds that meet at t = 1.
    CHECK_THROWS_AS(compile({make(v, ConstraintKind::Funnel, "x1", "t", "2 - t")}, 2), ConstraintError);
    CHECK_THROWS_AS(compile({make(v, ConstraintKind::Funnel, "x1", "ln(1 - t)", "5")}, 2), ConstraintError);
    // Expressions parsed against a different table.
    const auto other = make_variable_table(3);
    CHECK_THROWS_AS(compile({make(other, ConstraintKind::Funnel, "x1", "-1", "1")}, 2), ConstraintError);
    CHECK_THROWS_AS(constraint_kind_from_string("both"), ConstraintError);
    CHECK(constraint_kind_from_string("lbo") == ConstraintKind::LowerBoundedOneSided);
}
