#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cfunnel/metric.hpp"

namespace cfunnel {

struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

struct AscentOptions {
    std::size_t starts = 32;
    std::size_t max_iterations = 500;
    double gradient_tolerance = 1e-8;
    double armijo = 1e-4;
    double shrink = 0.5;
    /// Half-width of the start box along directions no funnel pins down.
    double free_half_width = 10.0;
    /// Overrides the inferred start box when set.
    std::optional<Box> box;
    std::uint64_t seed = 20240601;
};

/// Best local maximum of alpha(t, .) over all starts.
struct OptResult {
    double t = 0.0;
    double value = 0.0;
    Eigen::VectorXd maximizer;
    /// min_i psi_i at the maximizer.
    double alpha_bar = 0.0;
    double grad_norm = 0.0;
    std::size_t starts = 0;
    std::size_t converged_starts = 0;
    /// True when the reported maximizer itself met the gradient tolerance.
    bool converged = false;
};

class OptimizationError : public std::runtime_error {
public:
    OptimizationError(const std::string& what, OptResult diagnostics)
        : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}
    const OptResult& diagnostics() const { return diagnostics_; }

private:
    OptResult diagnostics_;
};

/// Start box at time t: for every state coordinate that some funnel
/// constraint's output equals exactly (h = x_j), the funnel interval at t;
/// otherwise [-free_half_width, free_half_width].
Box start_box(const SmoothMetric& metric, double t, double free_half_width);

/// Multi-start gradient ascent with Armijo backtracking. Never throws for
/// non-convergence; inspect OptResult::converged.
OptResult maximize_alpha(const SmoothMetric& metric, double t, const AscentOptions& options = {},
                         const Eigen::VectorXd* warm_start = nullptr);

/// As maximize_alpha, but throws OptimizationError if no start converged.
OptResult alpha_opt(const SmoothMetric& metric, double t, const AscentOptions& options = {},
                    const Eigen::VectorXd* warm_start = nullptr);

/// alpha_opt on a time grid.
struct OptProfile {
    std::vector<OptResult> points;

    double infimum() const;
    double supremum() const;
    /// Value at grid time nearest to t.
    const OptResult& nearest(double t) const;
    std::size_t unconverged() const;

    /// Header: t,alpha_opt,x1..xn,status
    void write_csv(std::ostream& os) const;
};

/// Grid t0, t0 + dt, ..., up to t1 (inclusive within dt/2). When warm_start
/// is set every time after the first also starts from the previous maximizer.
OptProfile sweep_alpha_opt(const SmoothMetric& metric, double t0, double t1, double dt,
                           const AscentOptions& options = {}, bool warm_start = true);

}  // namespace cfunnel
