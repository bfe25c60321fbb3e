#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cfunnel/optimizer.hpp"
#include "fixtures.hpp"

using namespace cfunnel;
using testing::make;

TEST_CASE("symmetric single funnel: closed-form maximum") {
    const auto v = make_variable_table(1);
    auto ps = std::make_shared<const PredicateSet>(
        compile({make(v, ConstraintKind::Funnel, "x1", "-1", "1")}, 1));
    for (double nu : {2.0, 10.0, 50.0}) {
        const SmoothMetric m(ps, nu);
        const OptResult r = alpha_opt(m, 0.0);
        CHECK(r.converged);
        CHECK(r.value == doctest::Approx(1.0 - std::log(2.0) / nu).epsilon(1e-12));
        CHECK(std::abs(r.maximizer[0]) < 1e-8);
    }
}

TEST_CASE("start box pins funnel coordinates") {
    const SmoothMetric m(testing::example1_timevarying(), 10.0);
    const Box b = start_box(m, 0.0, 10.0);
    CHECK(b.lower[0] == doctest::Approx(-2.0));
    CHECK(b.upper[0] == doctest::Approx(0.0));
    CHECK(b.lower[1] == -10.0);
    CHECK(b.upper[1] == 10.0);
}

TEST_CASE("closed-loop scenario profile stays inside (0.3, 1.1)") {
    const SmoothMetric m(testing::example1_timevarying(), 10.0);
    const OptProfile p = sweep_alpha_opt(m, 0.0, 20.0, 0.1);
    CHECK(p.points.size() == 201);
    CHECK(p.unconverged() == 0);
    CHECK(p.infimum() > 0.3);
    CHECK(p.supremum() < 1.1);
}

TEST_CASE("maximizer is a critical point and beats nearby states") {
    const SmoothMetric m(testing::example1_timevarying(), 10.0);
    for (double t : {0.0, 4.2, 13.0}) {
        const OptResult r = alpha_opt(m, t);
        CHECK(r.grad_norm < 1e-8);
        CHECK(r.alpha_bar >= r.value);
        for (int k = 0; k < 8; ++k) {
            Eigen::VectorXd d(2);
            d << std::cos(k * M_PI / 4), std::sin(k * M_PI / 4);
            CHECK(m.alpha(t, r.maximizer + 1e-3 * d) <= r.value);
        }
    }
}

TEST_CASE("infeasible constraint set reports a non-positive value") {
    const auto v = make_variable_table(1);
    auto ps = std::make_shared<const PredicateSet>(compile({
        make(v, ConstraintKind::Funnel, "x1", "-1", "0"),
        make(v, ConstraintKind::Funnel, "x1", "1", "2"),
    }, 1));
    const SmoothMetric m(ps, 10.0);
    const OptResult r = maximize_alpha(m, 0.0);
    CHECK(r.value <= 0.0);
    CHECK(r.alpha_bar <= 0.0);
}

TEST_CASE("time-invariant constraints give a constant profile") {
    const SmoothMetric m(testing::example1_snapshot(), 10.0);
    const OptProfile p = sweep_alpha_opt(m, 0.0, 5.0, 0.5);
    CHECK(p.supremum() - p.infimum() < 1e-8);
}

TEST_CASE("warm and cold sweeps agree") {
    const SmoothMetric m(testing::example1_timevarying(), 10.0);
    const OptProfile warm = sweep_alpha_opt(m, 0.0, 20.0, 0.5, {}, true);
    const OptProfile cold = sweep_alpha_opt(m, 0.0, 20.0, 0.5, {}, false);
    REQUIRE(warm.points.size() == cold.points.size());
    for (std::size_t k = 0; k < warm.points.size(); ++k) {
        CHECK(warm.points[k].t == cold.points[k].t);
        CHECK(std::abs(warm.points[k].value - cold.points[k].value) < 1e-6);
    }
}

TEST_CASE("same seed, same answer") {
    const SmoothMetric m(testing::example1_timevarying(), 10.0);
    const OptResult a = maximize_alpha(m, 3.0), b = maximize_alpha(m, 3.0);
    CHECK(a.value == b.value);
    CHECK(a.maximizer == b.maximizer);
}

TEST_CASE("no converged start raises with diagnostics") {
    const SmoothMetric m(testing::example1_timevarying(), 10.0);
    AscentOptions o;
    o.max_iterations = 1;
    o.starts = 2;
    try {
        alpha_opt(m, 0.0, o);
        FAIL("expected OptimizationError");
    } catch (const OptimizationError& e) {
        CHECK(e.diagnostics().converged_starts == 0);
        CHECK(e.diagnostics().starts == 2);
    }
    CHECK_FALSE(maximize_alpha(m, 0.0, o).converged);
}

TEST_CASE("profile CSV layout") {
    const SmoothMetric m(testing::example1_snapshot(), 10.0);
    const OptProfile p = sweep_alpha_opt(m, 0.0, 1.0, 0.5);
    std::ostringstream os;
    p.write_csv(os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "t,alpha_opt,x1,x2,status");
    int rows = 0;
    while (std::getline(is, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 4);
        CHECK(line.substr(line.size() - 3) == ",OK");
        ++rows;
    }
    CHECK(rows == 3);
    CHECK(p.nearest(0.6).t == 0.5);
}
