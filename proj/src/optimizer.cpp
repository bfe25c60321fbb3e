#include "cfunnel/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <limits>
#include <random>

#include <fmt/format.h>

namespace cfunnel {

namespace {

struct StartOutcome {
    Eigen::VectorXd x;
    double value = -std::numeric_limits<double>::infinity();
    double grad_norm = std::numeric_limits<double>::infinity();
    bool converged = false;
};

StartOutcome ascend(const SmoothMetric& metric, double t, Eigen::VectorXd x,
                    const AscentOptions& opt) {
    constexpr double kEps = std::numeric_limits<double>::epsilon();
    MetricEvaluation ev = metric.evaluate(t, x);
    double step = 1.0 / std::max(1.0, ev.grad.norm());

    StartOutcome out;
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
        const double gn = ev.grad.norm();
        if (gn < opt.gradient_tolerance) break;

        double s = step;
        bool accepted = false;
        Eigen::VectorXd xn;
        MetricEvaluation evn;
        for (int bt = 0; bt < 80; ++bt, s *= opt.shrink) {
            xn = x + s * ev.grad;
            evn = metric.evaluate(t, xn);
            if (!std::isfinite(evn.alpha)) continue;
            if (evn.alpha >= ev.alpha + opt.armijo * s * gn * gn) {
                accepted = true;
                break;
            }
            // At the noise floor of alpha the sufficient-increase test is
            // meaningless; fall back to gradient-norm decrease.
            const double noise = 8.0 * kEps * std::max(1.0, std::abs(ev.alpha));
            if (std::abs(evn.alpha - ev.alpha) <= noise && evn.grad.norm() < gn) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;

        // Barzilai-Borwein trial step for the next iteration.
        const Eigen::VectorXd dx = xn - x;
        const double curvature = -dx.dot(evn.grad - ev.grad);
        step = curvature > 0.0 ? dx.squaredNorm() / curvature : 2.0 * s;
        step = std::clamp(step, 1e-12, 1e8);

        x = std::move(xn);
        ev = std::move(evn);
    }
    out.x = std::move(x);
    out.value = ev.alpha;
    out.grad_norm = ev.grad.norm();
    out.converged = out.grad_norm < opt.gradient_tolerance;
    return out;
}

bool lexicographically_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                        b.data() + b.size());
}

// Larger value wins; values equal to ~1e-12 fall back to the smaller maximizer.
bool better(const StartOutcome& a, const StartOutcome& b) {
    const double tol = 1e-12 * std::max(1.0, std::abs(b.value));
    if (a.value > b.value + tol) return true;
    if (a.value < b.value - tol) return false;
    return lexicographically_less(a.x, b.x);
}

}  // namespace

Box start_box(const SmoothMetric& metric, double t, double free_half_width) {
    const auto n = static_cast<Eigen::Index>(metric.dim());
    Box box{Eigen::VectorXd::Constant(n, -free_half_width),
            Eigen::VectorXd::Constant(n, free_half_width)};
    std::vector<bool> pinned(static_cast<std::size_t>(n), false);
    std::vector<double> slots(static_cast<std::size_t>(n) + 1, 0.0);
    slots.back() = t;
    for (const auto& c : metric.predicates().constraints()) {
        if (c.kind != ConstraintKind::Funnel || c.h.root().op != Op::Variable) continue;
        const std::size_t j = c.h.root().slot;
        const double lo = c.lower->eval(slots);
        const double hi = c.upper->eval(slots);
        const auto ji = static_cast<Eigen::Index>(j);
        if (!pinned[j]) {
            box.lower[ji] = lo;
            box.upper[ji] = hi;
            pinned[j] = true;
        } else {
            box.lower[ji] = std::max(box.lower[ji], lo);
            box.upper[ji] = std::min(box.upper[ji], hi);
            if (box.lower[ji] > box.upper[ji]) std::swap(box.lower[ji], box.upper[ji]);
        }
    }
    return box;
}

OptResult maximize_alpha(const SmoothMetric& metric, double t, const AscentOptions& options,
                         const Eigen::VectorXd* warm_start) {
    const auto n = static_cast<Eigen::Index>(metric.dim());
    const Box box = options.box ? *options.box : start_box(metric, t, options.free_half_width);
    if (box.lower.size() != n || box.upper.size() != n) {
        throw std::invalid_argument("maximize_alpha: search box dimension mismatch");
    }

    std::mt19937_64 rng(options.seed ^ (std::bit_cast<std::uint64_t>(t) * 0x9E3779B97F4A7C15ULL));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<Eigen::VectorXd> starts;
    if (warm_start) starts.push_back(*warm_start);
    for (std::size_t s = 0; s < options.starts; ++s) {
        Eigen::VectorXd x(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            x[j] = box.lower[j] + unit(rng) * (box.upper[j] - box.lower[j]);
        }
        starts.push_back(std::move(x));
    }

    std::optional<StartOutcome> best_converged;
    std::optional<StartOutcome> best_any;
    std::size_t converged = 0;
    for (const auto& x0 : starts) {
        StartOutcome o = ascend(metric, t, x0, options);
        if (o.converged) {
            ++converged;
            if (!best_converged || better(o, *best_converged)) best_converged = o;
        }
        if (!best_any || better(o, *best_any)) best_any = std::move(o);
    }

    const StartOutcome& best = best_converged ? *best_converged : *best_any;
    OptResult r;
    r.t = t;
    r.value = best.value;
    r.maximizer = best.x;
    r.alpha_bar = metric.alpha_bar(t, best.x);
    r.grad_norm = best.grad_norm;
    r.starts = starts.size();
    r.converged_starts = converged;
    r.converged = best.converged;
    return r;
}

OptResult alpha_opt(const SmoothMetric& metric, double t, const AscentOptions& options,
                    const Eigen::VectorXd* warm_start) {
    OptResult r = maximize_alpha(metric, t, options, warm_start);
    if (r.converged_starts == 0) {
        throw OptimizationError(
            fmt::format("alpha_opt(t={}): none of {} starts converged (best value {}, |grad| {})",
                        t, r.starts, r.value, r.grad_norm),
            r);
    }
    return r;
}

double OptProfile::infimum() const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& p : points) v = std::min(v, p.value);
    return v;
}

double OptProfile::supremum() const {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& p : points) v = std::max(v, p.value);
    return v;
}

const OptResult& OptProfile::nearest(double t) const {
    if (points.empty()) throw std::out_of_range("OptProfile::nearest: empty profile");
    auto it = std::min_element(points.begin(), points.end(), [t](const auto& a, const auto& b) {
        return std::abs(a.t - t) < std::abs(b.t - t);
    });
    return *it;
}

std::size_t OptProfile::unconverged() const {
    return static_cast<std::size_t>(
        std::count_if(points.begin(), points.end(), [](const auto& p) { return !p.converged; }));
}

void OptProfile::write_csv(std::ostream& os) const {
    const Eigen::Index n = points.empty() ? 0 : points.front().maximizer.size();
    os << "t,alpha_opt";
    for (Eigen::Index j = 0; j < n; ++j) os << ",x" << (j + 1);
    os << ",status\n";
    for (const auto& p : points) {
        os << fmt::format("{:.17g},{:.17g}", p.t, p.value);
        for (Eigen::Index j = 0; j < n; ++j) os << fmt::format(",{:.17g}", p.maximizer[j]);
        os << (p.converged ? ",OK\n" : ",WARN\n");
    }
}

OptProfile sweep_alpha_opt(const SmoothMetric& metric, double t0, double t1, double dt,
                           const AscentOptions& options, bool warm_start) {
    if (!(dt > 0.0)) throw std::invalid_argument("sweep_alpha_opt: dt must be positive");
    if (t1 < t0) throw std::invalid_argument("sweep_alpha_opt: t1 < t0");
    OptProfile profile;
    const auto steps = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 0.5));
    if (!warm_start) {
        // Independent grid times: solve them in parallel.
        profile.points.resize(steps + 1);
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
        for (long long k = 0; k <= static_cast<long long>(steps); ++k) {
            try {
                profile.points[static_cast<std::size_t>(k)] =
                    maximize_alpha(metric, t0 + static_cast<double>(k) * dt, options, nullptr);
            } catch (...) {
#pragma omp critical
                failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
        return profile;
    }
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = t0 + static_cast<double>(k) * dt;
        const Eigen::VectorXd* warm =
            warm_start && !profile.points.empty() ? &profile.points.back().maximizer : nullptr;
        profile.points.push_back(maximize_alpha(metric, t, options, warm));
    }
    return profile;
}

}  // namespace cfunnel
