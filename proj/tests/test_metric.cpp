#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cfunnel/metric.hpp"
#include "fixtures.hpp"
#include "random_expr.hpp"

using namespace cfunnel;
using testing::make;

namespace {

// Unshifted log-sum-exp in long double: an independent evaluation of alpha for
// moderate predicate values.
double naive_alpha(const Eigen::VectorXd& psi, double nu) {
    long double s = 0.0L;
    for (Eigen::Index i = 0; i < psi.size(); ++i) s += std::exp(-static_cast<long double>(nu) * psi[i]);
    return static_cast<double>(-std::log(s) / nu);
}

Eigen::VectorXd random_state(std::mt19937_64& rng, double half_width) {
    std::uniform_real_distribution<double> u(-half_width, half_width);
    Eigen::VectorXd x(2);
    x << u(rng), u(rng);
    return x;
}

}  // namespace

TEST_CASE("snapshot values at the origin, nu = 2") {
    const SmoothMetric m(testing::example1_snapshot(), 2.0);
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
    const double expect = -0.5 * std::log(3 * std::exp(-4.0) + std::exp(-8.0));
    CHECK(expect == doctest::Approx(1.44766).epsilon(1e-4));
    CHECK(m.alpha(0.0, x) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(m.alpha_bar(0.0, x) == 2.0);
    CHECK(m.alpha_bar(0.0, x) <= m.alpha(0.0, x) + std::log(4.0) / 2.0);
    CHECK(m.alpha(0.0, x) + std::log(4.0) / 2.0 == doctest::Approx(2.14080).epsilon(1e-5));
}

TEST_CASE("alpha_bar vanishes on the boundary of the constrained set") {
    const SmoothMetric m(testing::example1_snapshot(), 2.0);
    Eigen::VectorXd x(2);
    x << 2.0, 0.0;  // x1 = upper bound
    CHECK(m.alpha_bar(0.0, x) == 0.0);
    x << 0.5, -1.5;  // x2 - x1 = -2
    CHECK(m.alpha_bar(0.0, x) == 0.0);
}

TEST_CASE("single predicate: alpha equals psi") {
    const auto v = make_variable_table(2);
    auto ps = std::make_shared<const PredicateSet>(
        compile({make(v, ConstraintKind::LowerBoundedOneSided, "sin(x1) + x2^2", "cos(t)", nullptr)}, 2));
    const SmoothMetric m(ps, 10.0);
    std::mt19937_64 rng(1);
    for (int k = 0; k < 1000; ++k) {
        const Eigen::VectorXd x = random_state(rng, 5.0);
        const double t = 3.0 * (k % 7);
        const double psi = std::sin(x[0]) + x[1] * x[1] - std::cos(t);
        CHECK(std::abs(m.alpha(t, x) - psi) <= 1e-12 * std::max(1.0, std::abs(psi)));
        CHECK(m.alpha_bar(t, x) == doctest::Approx(psi).epsilon(1e-15));
    }
}

TEST_CASE("alpha agrees with an unshifted long-double evaluation") {
    const SmoothMetric m(testing::example1_timevarying(), 10.0);
    std::mt19937_64 rng(2);
    for (int k = 0; k < 500; ++k) {
        const Eigen::VectorXd x = random_state(rng, 3.0);
        const double t = 0.04 * k;
        const Eigen::VectorXd psi = m.predicates().values(t, x);
        CHECK(m.alpha(t, x) == doctest::Approx(naive_alpha(psi, 10.0)).epsilon(1e-12));
    }
}

TEST_CASE("shifted evaluation survives large predicate magnitudes") {
    const SmoothMetric m(testing::example1_snapshot(), 10.0);
    Eigen::VectorXd x(2);
    x << 0.0, -1e4;  // LBO predicate near -1e4: exp(1e5) would overflow
    const double a = m.alpha(0.0, x);
    CHECK(std::isfinite(a));
    CHECK(a == doctest::Approx(m.alpha_bar(0.0, x)).epsilon(1e-12));
    x << 0.0, 1e4;
    CHECK(std::isfinite(m.alpha(0.0, x)));
    CHECK(m.grad_alpha_x(0.0, x).allFinite());
}

TEST_CASE("sandwich on random samples") {
    const SmoothMetric m(testing::example1_timevarying(), 10.0);
    const double gap = std::log(4.0) / 10.0;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ut(0.0, 20.0);
    for (int k = 0; k < 2000; ++k) {
        const Eigen::VectorXd x = random_state(rng, 10.0);
        const double t = ut(rng);
        const double a = m.alpha(t, x), ab = m.alpha_bar(t, x);
        CHECK(a <= ab + 1e-12);
        CHECK(ab <= a + gap + 1e-12);
    }
}

TEST_CASE("softmin weights sum to one") {
    const SmoothMetric m(testing::example1_snapshot(), 10.0);
    Eigen::VectorXd psi(4);
    psi << 1.0, -3.0, 500.0, 0.2;
    const Eigen::VectorXd w = m.weights(psi);
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w.minCoeff() >= 0.0);
    CHECK(m.soft_min(psi) <= psi.minCoeff());
}

TEST_CASE("gradient at a symmetric funnel midpoint is zero") {
    const auto v = make_variable_table(2);
    auto ps = std::make_shared<const PredicateSet>(
        compile({make(v, ConstraintKind::Funnel, "x1", "-1 + sin(t)", "1 + sin(t)")}, 2));
    const SmoothMetric m(ps, 10.0);
    Eigen::VectorXd x(2);
    x << std::sin(0.4), 7.0;
    const Eigen::VectorXd g = m.grad_alpha_x(0.4, x);
    CHECK(g.norm() <= 1e-15);
}

TEST_CASE("gradient: both paths and finite differences") {
    const SmoothMetric m(testing::example1_timevarying(), 10.0);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ut(0.0, 20.0);
    for (int k = 0; k < 300; ++k) {
        const Eigen::VectorXd x = random_state(rng, 4.0);
        const double t = ut(rng);
        const Eigen::VectorXd g = m.grad_alpha_x(t, x);
        const Eigen::VectorXd gp = m.grad_alpha_x_from_predicates(t, x);
        CHECK((g - gp).lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, g.lpNorm<Eigen::Infinity>()));
        for (Eigen::Index j = 0; j < 2; ++j) {
            const double fd = testing::ridders(
                [&](double v) {
                    Eigen::VectorXd y = x;
                    y[j] = v;
                    return m.alpha(t, y);
                },
                x[j]);
            CHECK(std::abs(g[j] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
        CHECK(m.evaluate(t, x).grad == g);
    }
}

TEST_CASE("time derivative") {
    SUBCASE("constant bounds give zero") {
        const SmoothMetric m(testing::example1_snapshot(), 10.0);
        Eigen::VectorXd x(2);
        x << 0.3, 0.1;
        CHECK(m.dalpha_dt(4.0, x) == 0.0);
    }
    SUBCASE("single LBO with lower = sin t gives -cos t") {
        const auto v = make_variable_table(1);
        auto ps = std::make_shared<const PredicateSet>(
            compile({make(v, ConstraintKind::LowerBoundedOneSided, "x1", "sin(t)", nullptr)}, 1));
        const SmoothMetric m(ps, 10.0);
        Eigen::VectorXd x(1);
        x << 0.9;
        for (double t : {0.0, 0.5, 2.0, 3.3}) CHECK(m.dalpha_dt(t, x) == doctest::Approx(-std::cos(t)).epsilon(1e-14));
    }
    SUBCASE("matches finite differences in t") {
        const SmoothMetric m(testing::example1_timevarying(), 10.0);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> ut(0.5, 19.5);
        for (int k = 0; k < 200; ++k) {
            const Eigen::VectorXd x = random_state(rng, 4.0);
            const double t = ut(rng);
            const double fd = testing::ridders([&](double s) { return m.alpha(s, x); }, t);
            CHECK(std::abs(m.dalpha_dt(t, x) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("Hessian matches differences of the gradient") {
    const SmoothMetric m(testing::example1_timevarying(), 10.0);
    std::mt19937_64 rng(6);
    for (int k = 0; k < 100; ++k) {
        const Eigen::VectorXd x = random_state(rng, 3.0);
        const double t = 0.2 * k;
        const Eigen::MatrixXd H = m.hessian(t, x);
        CHECK((H - H.transpose()).norm() <= 1e-10 * std::max(1.0, H.norm()));
        for (Eigen::Index i = 0; i < 2; ++i) {
            for (Eigen::Index j = 0; j < 2; ++j) {
                const double fd = testing::ridders(
                    [&](double v) {
                        Eigen::VectorXd y = x;
                        y[j] = v;
                        return m.grad_alpha_x(t, y)[i];
                    },
                    x[j]);
                CHECK(std::abs(H(i, j) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

TEST_CASE("symmetric single funnel in 1-D: closed-form curvature at the midpoint") {
    const auto v = make_variable_table(1);
    auto ps = std::make_shared<const PredicateSet>(
        compile({make(v, ConstraintKind::Funnel, "x1", "-1", "1")}, 1));
    const double nu = 10.0;
    const SmoothMetric m(ps, nu);
    // alpha = 1 - (1/nu) ln(2 cosh(nu x))  =>  alpha'' (0) = -nu.
    const Eigen::MatrixXd H = m.hessian(0.0, Eigen::VectorXd::Zero(1));
    CHECK(H(0, 0) == doctest::Approx(-nu).epsilon(1e-14));
    CHECK(m.alpha(0.0, Eigen::VectorXd::Zero(1)) == doctest::Approx(1 - std::log(2.0) / nu).epsilon(1e-15));
}

TEST_CASE("nu must be positive") {
    CHECK_THROWS_AS(SmoothMetric(testing::example1_snapshot(), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(SmoothMetric(testing::example1_snapshot(), -1.0), std::invalid_argument);
}
