#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cfunnel/metric.hpp"

namespace cfunnel {

// Sampling-based falsifiers for the structural assumptions on the constraint
// set. A PASS corroborates, it does not prove.

enum class Verdict { Pass, Warn, Fail };

const char* to_string(Verdict v);
/// Fail dominates Warn dominates Pass.
Verdict worst(Verdict a, Verdict b);

struct RadialOptions {
    std::vector<double> radii{1.0, 10.0, 100.0, 1000.0};
    std::size_t directions = 64;
    /// Times at which the radial profile is evaluated.
    std::vector<double> times{0.0};
    /// Growth between the second and last radius below this is only a WARN.
    double growth_floor = 1.0;
    std::uint64_t seed = 7;
};

/// Unit directions used by the radial checks: for n = 2 an evenly spaced
/// angular fan (contains the axes when the count is a multiple of 4); otherwise
/// the 2n signed axes followed by Gaussian-random directions.
std::vector<Eigen::VectorXd> radial_directions(std::size_t n, std::size_t count,
                                               std::uint64_t seed);

struct RadialReport {
    Verdict verdict = Verdict::Pass;
    Eigen::VectorXd worst_direction;
    double worst_time = 0.0;
    /// Increase of the probed quantity between the last two radii along the
    /// worst direction.
    double worst_growth = 0.0;
    std::size_t failing_directions = 0;
    std::size_t warning_directions = 0;
    std::string message;
};

/// -alpha_bar(t, r d) must keep increasing in r along every probed direction.
RadialReport check_coercivity(const SmoothMetric& metric, const RadialOptions& options = {});

struct CurvatureFinding {
    std::size_t constraint = 0;   // index into PredicateSet::constraints()
    ConstraintKind kind = ConstraintKind::Funnel;
    std::string required;         // "affine", "concave" or "convex"
    double min_eigenvalue = 0.0;  // over all sampled Hessians of h
    double max_eigenvalue = 0.0;
    Verdict verdict = Verdict::Pass;
};

struct SampleOptions {
    std::size_t samples = 500;
    double half_width = 10.0;
    double eigen_tolerance = 1e-9;
    double rank_floor = 1e-9;
    std::uint64_t seed = 11;
};

/// Every psi_i concave in x: funnel outputs affine, LBO outputs concave, UBO
/// outputs convex. Checked through the eigenvalues of sampled Hessians of h.
struct InvexityIReport {
    Verdict verdict = Verdict::Pass;
    std::vector<CurvatureFinding> constraints;
};
InvexityIReport check_invexity_condition_I(const PredicateSet& predicates,
                                           const SampleOptions& options = {});

/// n = m = p funnel-only, norm-coercive h, full-rank Jacobian.
struct InvexityIIReport {
    Verdict verdict = Verdict::Pass;
    bool square_funnels_only = false;
    RadialReport norm_growth;
    double min_singular_value = 0.0;
    double min_abs_determinant = 0.0;
    std::string message;
};
InvexityIIReport check_invexity_condition_II(const PredicateSet& predicates,
                                             const RadialOptions& radial = {},
                                             const SampleOptions& options = {});

struct CriticalPointReport {
    double grad_norm = 0.0;
    Eigen::VectorXd eigenvalues;
    bool negative_definite = false;
    /// max |h(x*) - (upper + lower)/2| when all constraints are funnels and m = n.
    std::optional<double> midpoint_residual;
};

/// Hessian spectrum at a critical point of alpha(t, .). Throws
/// std::invalid_argument when |grad| exceeds grad_tolerance.
CriticalPointReport critical_point_diagnostics(const SmoothMetric& metric, double t,
                                               const Eigen::VectorXd& x_star,
                                               double grad_tolerance = 1e-6);

}  // namespace cfunnel
