#include "cfunnel/sim.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace cfunnel {

void Plant::validate() const {
    if (n == 0) throw std::invalid_argument("plant dimension must be positive");
    if (f.size() != n) throw std::invalid_argument(fmt::format("f has {} entries, expected {}", f.size(), n));
    if (w.size() != n) throw std::invalid_argument(fmt::format("w has {} entries, expected {}", w.size(), n));
    if (g.size() != n) throw std::invalid_argument(fmt::format("g has {} rows, expected {}", g.size(), n));
    for (const auto& row : g) {
        if (row.size() != n) {
            throw std::invalid_argument(fmt::format("g rows must have {} entries", n));
        }
    }
    if (static_cast<std::size_t>(x0.size()) != n) {
        throw std::invalid_argument(fmt::format("x0 has {} entries, expected {}", x0.size(), n));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (f[i].depends_on(n)) throw std::invalid_argument("f must not depend on t");
        for (const auto& e : g[i]) {
            if (e.depends_on(n)) throw std::invalid_argument("g must not depend on t");
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (w[i].depends_on(j)) throw std::invalid_argument("w must depend on t only");
        }
    }
}

Eigen::VectorXd Plant::drift(const Eigen::VectorXd& x) const {
    const auto slots = pack(0.0, x);
    Eigen::VectorXd out(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) out[static_cast<Eigen::Index>(i)] = f[i].eval(slots);
    return out;
}

Eigen::MatrixXd Plant::gain(const Eigen::VectorXd& x) const {
    const auto slots = pack(0.0, x);
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd out(ni, ni);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g[i][j].eval(slots);
        }
    }
    return out;
}

Eigen::VectorXd Plant::disturbance(double t) const {
    std::vector<double> slots(n + 1, 0.0);
    slots[n] = t;
    Eigen::VectorXd out(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) out[static_cast<Eigen::Index>(i)] = w[i].eval(slots);
    return out;
}

Eigen::VectorXd plant_rhs(const Plant& plant, double t, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& u) {
    return plant.drift(x) + plant.gain(x) * u + plant.disturbance(t);
}

Eigen::VectorXd rhs(const Plant& plant, const Controller& controller, double t,
                    const Eigen::VectorXd& x) {
    return plant_rhs(plant, t, x, controller.control(t, x).u);
}

Eigen::VectorXd rk4_step(const OdeFunction& f, double t, const Eigen::VectorXd& x, double h) {
    const Eigen::VectorXd k1 = f(t, x);
    const Eigen::VectorXd k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(t + h, x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Eigen::VectorXd rk4_integrate(const OdeFunction& f, double t0, double t1,
                              const Eigen::VectorXd& x0, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("rk4_integrate: step must be positive");
    const auto steps = static_cast<long long>(std::llround((t1 - t0) / h));
    Eigen::VectorXd x = x0;
    for (long long k = 0; k < steps; ++k) x = rk4_step(f, t0 + static_cast<double>(k) * h, x, h);
    return x;
}

InputGainReport check_input_gain(const Plant& plant, const InputGainOptions& options) {
    InputGainReport rep;
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> u(-options.half_width, options.half_width);
    const auto ni = static_cast<Eigen::Index>(plant.n);
    for (std::size_t s = 0; s < options.samples; ++s) {
        Eigen::VectorXd x(ni);
        // First sample at the origin, the rest uniform in the box.
        for (Eigen::Index j = 0; j < ni; ++j) x[j] = s == 0 ? 0.0 : u(rng);
        const Eigen::MatrixXd g = plant.gain(x);
        const Eigen::MatrixXd gs = 0.5 * (g + g.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gs, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        if (lo < rep.min_eigenvalue) {
            rep.min_eigenvalue = lo;
            rep.worst_state = x;
        }
    }
    rep.verdict = rep.min_eigenvalue >= options.floor ? Verdict::Pass : Verdict::Fail;
    return rep;
}

double disturbance_bound(const Plant& plant, double horizon, std::size_t samples) {
    samples = std::max<std::size_t>(samples, 2);
    double w = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double t = horizon * static_cast<double>(k) / static_cast<double>(samples - 1);
        w = std::max(w, plant.disturbance(t).norm());
    }
    return w;
}

const char* to_string(SimStatus s) {
    switch (s) {
        case SimStatus::Completed: return "completed";
        case SimStatus::NonFinite: return "non-finite state";
        case SimStatus::FunnelBreach: return "funnel breach";
    }
    return "?";
}

SimResult integrate(const Plant& plant, const Controller& controller, const SimOptions& options) {
    if (!(options.dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
    if (!(options.t_end >= options.dt)) throw std::invalid_argument("integrate: t_end must be >= dt");
    if (options.record_every == 0) throw std::invalid_argument("integrate: record_every must be >= 1");
    plant.validate();
    if (controller.metric().dim() != plant.n) {
        throw std::invalid_argument("integrate: plant and controller dimensions differ");
    }

    const auto start = std::chrono::steady_clock::now();
    const double inf = std::numeric_limits<double>::infinity();
    const double T = controller.funnel().T;
    const auto steps = static_cast<std::size_t>(std::llround(options.t_end / options.dt));

    SimResult res;
    SimEvents& ev = res.events;
    ev.min_lower_margin = inf;
    ev.min_upper_margin = inf;
    ev.min_alpha_bar_after_T = inf;
    ev.min_alpha_after_T = inf;

    const OdeFunction closed_loop = [&](double t, const Eigen::VectorXd& x) {
        return rhs(plant, controller, t, x);
    };

    Eigen::VectorXd x = plant.x0;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * options.dt;
        ControlEvaluation c;
        try {
            c = controller.control(t, x);
        } catch (const ExprError& e) {
            res.status = SimStatus::NonFinite;
            res.message = fmt::format("expression domain error at t={}: {}", t, e.what());
            break;
        }
        if (!x.allFinite() || !c.u.allFinite() || !std::isfinite(c.alpha)) {
            res.status = SimStatus::NonFinite;
            res.message = fmt::format("non-finite state or input at t={}", t);
            break;
        }

        ++ev.steps;
        if (c.clamped) ++ev.clamps;
        if (c.alpha_bar > 0.0) {
            if (ev.first_alpha_bar_positive < 0.0) ev.first_alpha_bar_positive = t;
        } else {
            ev.last_alpha_bar_nonpositive = t;
        }
        const double lower_margin = c.alpha - c.rho_lower;
        const double upper_margin = c.rho_upper - c.alpha;
        if (!(lower_margin > 0.0 && upper_margin > 0.0)) ++ev.breaches;
        ev.min_lower_margin = std::min(ev.min_lower_margin, lower_margin);
        ev.min_upper_margin = std::min(ev.min_upper_margin, upper_margin);
        if (t > T) ev.min_alpha_bar_after_T = std::min(ev.min_alpha_bar_after_T, c.alpha_bar);
        if (t >= T) ev.min_alpha_after_T = std::min(ev.min_alpha_after_T, c.alpha);

        const bool record = k % options.record_every == 0 || k == steps;
        const double guard = options.breach_guard * (c.rho_upper - c.rho_lower);
        const bool breached = lower_margin < -guard || upper_margin < -guard;
        if (record || breached) res.samples.push_back({t, x, c});
        if (breached) {
            res.status = SimStatus::FunnelBreach;
            res.message = fmt::format(
                "alpha={} left the funnel ({}, {}) by more than {} of its width at t={}", c.alpha,
                c.rho_lower, c.rho_upper, options.breach_guard, t);
            break;
        }
        if (k == steps) break;

        // Stage one reuses the input already computed at (t, x).
        const double h = options.dt;
        try {
            const Eigen::VectorXd k1 = plant_rhs(plant, t, x, c.u);
            const Eigen::VectorXd k2 = closed_loop(t + 0.5 * h, x + 0.5 * h * k1);
            const Eigen::VectorXd k3 = closed_loop(t + 0.5 * h, x + 0.5 * h * k2);
            const Eigen::VectorXd k4 = closed_loop(t + h, x + h * k3);
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        } catch (const ExprError& e) {
            res.status = SimStatus::NonFinite;
            res.message = fmt::format("expression domain error after t={}: {}", t, e.what());
            break;
        }
    }

    res.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectorySample>& samples) {
    if (samples.empty()) return;
    const Eigen::Index n = samples.front().x.size();
    const Eigen::Index k = samples.front().control.psi.size();
    os << "t";
    for (Eigen::Index j = 0; j < n; ++j) os << ",x" << (j + 1);
    for (Eigen::Index j = 0; j < n; ++j) os << ",u" << (j + 1);
    os << ",alpha,alpha_bar,alpha_hat,eps,xi,V,rho_lo,rho_hi";
    for (Eigen::Index j = 0; j < k; ++j) os << ",psi_" << (j + 1);
    os << ",clamped\n";
    for (const auto& s : samples) {
        const ControlEvaluation& c = s.control;
        os << fmt::format("{:.17g}", s.t);
        for (Eigen::Index j = 0; j < n; ++j) os << fmt::format(",{:.17g}", s.x[j]);
        for (Eigen::Index j = 0; j < n; ++j) os << fmt::format(",{:.17g}", c.u[j]);
        os << fmt::format(",{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}",
                          c.alpha, c.alpha_bar, c.alpha_hat, c.epsilon, c.xi, c.V, c.rho_lower,
                          c.rho_upper);
        for (Eigen::Index j = 0; j < k; ++j) os << fmt::format(",{:.17g}", c.psi[j]);
        os << (c.clamped ? ",1\n" : ",0\n");
    }
}

}  // namespace cfunnel
