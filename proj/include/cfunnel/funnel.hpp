#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "cfunnel/optimizer.hpp"

namespace cfunnel {

class FunnelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The alpha-funnel  lower(t) < alpha(t, x(t)) < rho_max  with
///
///   lower(t) = ((T - t) / T)^(1 / (1 - beta)) (rho_0 - rho_inf) + rho_inf,  t < T
///   lower(t) = rho_inf,                                                    t >= T
struct FunnelSpec {
    double rho_0 = -1.0;
    double rho_inf = 0.0;
    double T = 1.0;
    double beta = 0.5;
    double rho_max = 50.0;

    double rho_lower(double t) const;
    double rho_lower_dot(double t) const;
    double rho_upper(double) const { return rho_max; }
    double rho_upper_dot(double) const { return 0.0; }

    /// rho_s = upper + lower, rho_d = upper - lower.
    double rho_sum(double t) const { return rho_upper(t) + rho_lower(t); }
    double rho_diff(double t) const { return rho_upper(t) - rho_lower(t); }
    double rho_sum_dot(double t) const { return rho_upper_dot(t) + rho_lower_dot(t); }
    double rho_diff_dot(double t) const { return rho_upper_dot(t) - rho_lower_dot(t); }

    /// Throws FunnelError on T <= 0, beta outside (0, 1), rho_inf < 0 or
    /// non-finite fields.
    void validate() const;
};

inline double rho_lower(const FunnelSpec& spec, double t) { return spec.rho_lower(t); }
inline double rho_lower_dot(const FunnelSpec& spec, double t) { return spec.rho_lower_dot(t); }

/// Fields a user may pin; the rest are chosen by design().
struct FunnelRequest {
    std::optional<double> rho_0;
    double rho_inf = 0.0;
    double T = 1.0;
    double beta = 0.5;
    std::optional<double> rho_max;
};

/// Lower-bound margin used when rho_0 is left to design(): max(0.5, 0.1 |alpha0|).
double auto_rho0_margin(double alpha0);

/// Choose the funnel for an initial metric value alpha0 = alpha(0, x0).
/// alpha0 > rho_inf: constant lower bound rho_inf (rho_0 = rho_inf).
/// Otherwise: rho_0 = alpha0 - auto_rho0_margin(alpha0), rising to rho_inf at T.
/// rho_max defaults to 50.
FunnelSpec design(double alpha0, const FunnelRequest& request);

struct FeasibilityReport {
    /// min over the grid of rho_max - lower(t)  (condition (i)).
    double delta_rho = 0.0;
    /// min of alpha_opt(t) - lower(t)  (condition (ii)).
    double lower_margin = 0.0;
    /// min of rho_max - alpha_opt(t).
    double upper_margin = 0.0;
    bool condition_i = false;
    bool condition_ii = false;
    bool upper_ok = false;
    bool pass() const { return condition_i && condition_ii && upper_ok; }
};

/// min of rho_max - lower(t) on a uniform grid of [0, horizon].
double min_width(const FunnelSpec& spec, double horizon, std::size_t samples = 2001);

FeasibilityReport validate_feasibility(const FunnelSpec& spec, const OptProfile& profile);

}  // namespace cfunnel
