#include "cfunnel/checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace cfunnel {

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::Warn: return "WARN";
        case Verdict::Fail: return "FAIL";
    }
    return "?";
}

Verdict worst(Verdict a, Verdict b) { return static_cast<int>(a) >= static_cast<int>(b) ? a : b; }

std::vector<Eigen::VectorXd> radial_directions(std::size_t n, std::size_t count,
                                               std::uint64_t seed) {
    std::vector<Eigen::VectorXd> dirs;
    const auto ni = static_cast<Eigen::Index>(n);
    if (n == 1) {
        dirs.push_back(Eigen::VectorXd::Constant(1, 1.0));
        dirs.push_back(Eigen::VectorXd::Constant(1, -1.0));
        return dirs;
    }
    if (n == 2) {
        for (std::size_t k = 0; k < count; ++k) {
            const double a = 2.0 * std::numbers::pi * static_cast<double>(k) /
                             static_cast<double>(count);
            Eigen::VectorXd d(2);
            // Exact zeros on the axes.
            d << (k * 4 == count || k * 4 == 3 * count ? 0.0 : std::cos(a)),
                (k * 2 == count || k == 0 ? 0.0 : std::sin(a));
            dirs.push_back(d / d.norm());
        }
        return dirs;
    }
    for (Eigen::Index j = 0; j < ni && dirs.size() < count; ++j) {
        for (double s : {1.0, -1.0}) {
            Eigen::VectorXd d = Eigen::VectorXd::Zero(ni);
            d[j] = s;
            dirs.push_back(d);
        }
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    while (dirs.size() < count) {
        Eigen::VectorXd d(ni);
        for (Eigen::Index j = 0; j < ni; ++j) d[j] = normal(rng);
        if (d.norm() > 1e-12) dirs.push_back(d / d.norm());
    }
    return dirs;
}

namespace {

using Probe = std::function<double(double, const Eigen::VectorXd&)>;

RadialReport radial_check(std::size_t n, const RadialOptions& opt, const Probe& probe,
                          const char* what) {
    if (opt.radii.size() < 2) throw std::invalid_argument("radial check needs at least two radii");
    RadialReport rep;
    rep.worst_growth = std::numeric_limits<double>::infinity();
    const auto dirs = radial_directions(n, opt.directions, opt.seed);
    bool have_worst = false;
    Verdict worst_verdict = Verdict::Pass;
    const std::vector<double> times = opt.times.empty() ? std::vector<double>{0.0} : opt.times;
    for (const auto& d : dirs) {
        Verdict dv = Verdict::Pass;
        for (double t : times) {
            std::vector<double> v;
            try {
                for (double r : opt.radii) v.push_back(probe(t, r * d));
            } catch (const ExprError& e) {
                dv = worst(dv, Verdict::Warn);
                rep.message = fmt::format("{} could not be evaluated far out: {}", what, e.what());
                continue;
            }
            const std::size_t last = v.size() - 1;
            const double growth = v[last] - v[last - 1];
            const double tol = 1e-9 * std::max(1.0, std::abs(v[last]));
            Verdict tv = Verdict::Pass;
            if (!(growth > tol)) {
                tv = Verdict::Fail;
            } else {
                for (std::size_t k = 1; k < last; ++k) {
                    if (!(v[k + 1] > v[k])) tv = Verdict::Warn;
                }
                if (v[last] - v[1] < opt.growth_floor) tv = Verdict::Warn;
            }
            if (!have_worst || static_cast<int>(tv) > static_cast<int>(worst_verdict) ||
                (tv == worst_verdict && growth < rep.worst_growth)) {
                have_worst = true;
                worst_verdict = tv;
                rep.worst_growth = growth;
                rep.worst_direction = d;
                rep.worst_time = t;
            }
            dv = worst(dv, tv);
            rep.verdict = worst(rep.verdict, tv);
        }
        if (dv == Verdict::Fail) ++rep.failing_directions;
        if (dv == Verdict::Warn) ++rep.warning_directions;
    }
    if (rep.message.empty()) {
        std::string dir;
        for (Eigen::Index j = 0; j < rep.worst_direction.size(); ++j) {
            dir += fmt::format("{}{:.4g}", j ? ", " : "", rep.worst_direction[j]);
        }
        rep.message = fmt::format("{}: {} of {} directions fail, {} warn; worst direction ({}) "
                                  "at t={} with final growth {:.6g}",
                                  what, rep.failing_directions, dirs.size(),
                                  rep.warning_directions, dir, rep.worst_time, rep.worst_growth);
    }
    return rep;
}

Eigen::VectorXd random_point(std::mt19937_64& rng, std::size_t n, double half_width) {
    std::uniform_real_distribution<double> u(-half_width, half_width);
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = u(rng);
    return x;
}

}  // namespace

RadialReport check_coercivity(const SmoothMetric& metric, const RadialOptions& options) {
    return radial_check(metric.dim(), options,
                        [&](double t, const Eigen::VectorXd& x) { return -metric.alpha_bar(t, x); },
                        "-alpha_bar growth");
}

InvexityIReport check_invexity_condition_I(const PredicateSet& predicates,
                                           const SampleOptions& options) {
    InvexityIReport rep;
    const std::size_t n = predicates.dim();
    const auto ni = static_cast<Eigen::Index>(n);
    std::mt19937_64 rng(options.seed);
    std::vector<Eigen::VectorXd> points;
    for (std::size_t s = 0; s < options.samples; ++s) {
        points.push_back(random_point(rng, n, options.half_width));
    }

    const auto& cons = predicates.constraints();
    for (std::size_t i = 0; i < cons.size(); ++i) {
        CurvatureFinding f;
        f.constraint = i;
        f.kind = cons[i].kind;
        f.required = cons[i].kind == ConstraintKind::Funnel                 ? "affine"
                     : cons[i].kind == ConstraintKind::LowerBoundedOneSided ? "concave"
                                                                            : "convex";
        f.min_eigenvalue = std::numeric_limits<double>::infinity();
        f.max_eigenvalue = -std::numeric_limits<double>::infinity();
        Eigen::MatrixXd hess(ni, ni);
        for (const auto& x : points) {
            const auto slots = pack(0.0, x);
            for (std::size_t a = 0; a < n; ++a) {
                for (std::size_t b = 0; b < n; ++b) {
                    hess(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                        cons[i].d2h[a][b].eval(slots);
                }
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess, Eigen::EigenvaluesOnly);
            f.min_eigenvalue = std::min(f.min_eigenvalue, eig.eigenvalues().minCoeff());
            f.max_eigenvalue = std::max(f.max_eigenvalue, eig.eigenvalues().maxCoeff());
        }
        const double tol = options.eigen_tolerance;
        bool ok = true;
        switch (f.kind) {
            case ConstraintKind::Funnel:
                ok = f.max_eigenvalue <= tol && f.min_eigenvalue >= -tol;
                break;
            case ConstraintKind::LowerBoundedOneSided: ok = f.max_eigenvalue <= tol; break;
            case ConstraintKind::UpperBoundedOneSided: ok = f.min_eigenvalue >= -tol; break;
        }
        f.verdict = ok ? Verdict::Pass : Verdict::Fail;
        rep.verdict = worst(rep.verdict, f.verdict);
        rep.constraints.push_back(std::move(f));
    }
    return rep;
}

InvexityIIReport check_invexity_condition_II(const PredicateSet& predicates,
                                             const RadialOptions& radial,
                                             const SampleOptions& options) {
    InvexityIIReport rep;
    const std::size_t n = predicates.dim();
    rep.square_funnels_only = predicates.m() == n && predicates.p() == n;
    if (!rep.square_funnels_only) {
        rep.verdict = Verdict::Fail;
        rep.message = fmt::format("requires n = m = p, got n={}, m={}, p={}", n, predicates.m(),
                                  predicates.p());
        return rep;
    }

    rep.norm_growth = radial_check(
        n, radial, [&](double, const Eigen::VectorXd& x) { return predicates.outputs(x).norm(); },
        "|h(x)| growth");

    std::mt19937_64 rng(options.seed);
    rep.min_singular_value = std::numeric_limits<double>::infinity();
    rep.min_abs_determinant = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < options.samples; ++s) {
        const Eigen::MatrixXd jac = predicates.jacobian(random_point(rng, n, options.half_width));
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
        rep.min_singular_value = std::min(rep.min_singular_value, svd.singularValues().minCoeff());
        rep.min_abs_determinant = std::min(rep.min_abs_determinant, std::abs(jac.determinant()));
    }
    const Verdict rank = rep.min_singular_value >= options.rank_floor ? Verdict::Pass
                                                                       : Verdict::Fail;
    rep.verdict = worst(rep.norm_growth.verdict, rank);
    rep.message = fmt::format("n=m=p={}; min singular value of J {:.6g}; min |det J| {:.6g}; {}",
                              n, rep.min_singular_value, rep.min_abs_determinant,
                              rep.norm_growth.message);
    return rep;
}

CriticalPointReport critical_point_diagnostics(const SmoothMetric& metric, double t,
                                               const Eigen::VectorXd& x_star,
                                               double grad_tolerance) {
    CriticalPointReport rep;
    rep.grad_norm = metric.grad_alpha_x(t, x_star).norm();
    if (!(rep.grad_norm <= grad_tolerance)) {
        throw std::invalid_argument(
            fmt::format("not a critical point: |grad alpha| = {:.3g} > {:.3g}", rep.grad_norm,
                        grad_tolerance));
    }
    const Eigen::MatrixXd hess = metric.hessian(t, x_star);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (hess + hess.transpose()),
                                                       Eigen::EigenvaluesOnly);
    rep.eigenvalues = eig.eigenvalues();
    rep.negative_definite = rep.eigenvalues.maxCoeff() < -1e-12;

    const PredicateSet& ps = metric.predicates();
    if (ps.p() == ps.m() && ps.m() == ps.dim()) {
        const auto slots = pack(t, x_star);
        double r = 0.0;
        for (const auto& c : ps.constraints()) {
            const double mid = 0.5 * (c.upper->eval(slots) + c.lower->eval(slots));
            r = std::max(r, std::abs(c.h.eval(slots) - mid));
        }
        rep.midpoint_residual = r;
    }
    return rep;
}

}  // namespace cfunnel
