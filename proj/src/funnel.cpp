#include "cfunnel/funnel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace cfunnel {

double FunnelSpec::rho_lower(double t) const {
    if (t >= T) return rho_inf;
    const double s = (T - t) / T;
    return std::pow(s, 1.0 / (1.0 - beta)) * (rho_0 - rho_inf) + rho_inf;
}

double FunnelSpec::rho_lower_dot(double t) const {
    if (t >= T) return 0.0;
    const double s = (T - t) / T;
    return -std::pow(s, beta / (1.0 - beta)) * (rho_0 - rho_inf) / (T * (1.0 - beta));
}

void FunnelSpec::validate() const {
    for (double v : {rho_0, rho_inf, T, beta, rho_max}) {
        if (!std::isfinite(v)) throw FunnelError("funnel parameters must be finite");
    }
    if (!(T > 0.0)) throw FunnelError(fmt::format("funnel T must be positive, got {}", T));
    if (!(beta > 0.0 && beta < 1.0)) {
        throw FunnelError(fmt::format("funnel beta must lie in (0, 1), got {}", beta));
    }
    if (rho_inf < 0.0) throw FunnelError(fmt::format("rho_inf must be >= 0, got {}", rho_inf));
}

double auto_rho0_margin(double alpha0) { return std::max(0.5, 0.1 * std::abs(alpha0)); }

FunnelSpec design(double alpha0, const FunnelRequest& request) {
    if (request.rho_inf < 0.0) {
        throw FunnelError(fmt::format("rho_inf must be >= 0, got {}", request.rho_inf));
    }
    FunnelSpec spec;
    spec.rho_inf = request.rho_inf;
    spec.T = request.T;
    spec.beta = request.beta;
    spec.rho_max = request.rho_max.value_or(50.0);

    if (request.rho_0) {
        if (!(*request.rho_0 < alpha0)) {
            throw FunnelError(fmt::format("rho_0 = {} must lie strictly below alpha(0, x0) = {}",
                                          *request.rho_0, alpha0));
        }
        spec.rho_0 = *request.rho_0;
    } else if (alpha0 > request.rho_inf) {
        spec.rho_0 = request.rho_inf;
    } else {
        spec.rho_0 = alpha0 - auto_rho0_margin(alpha0);
    }
    if (!(alpha0 < spec.rho_max)) {
        throw FunnelError(fmt::format("alpha(0, x0) = {} must lie strictly below rho_max = {}",
                                      alpha0, spec.rho_max));
    }
    spec.validate();
    return spec;
}

double min_width(const FunnelSpec& spec, double horizon, std::size_t samples) {
    samples = std::max<std::size_t>(samples, 2);
    double w = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < samples; ++k) {
        const double t = horizon * static_cast<double>(k) / static_cast<double>(samples - 1);
        w = std::min(w, spec.rho_diff(t));
    }
    return w;
}

FeasibilityReport validate_feasibility(const FunnelSpec& spec, const OptProfile& profile) {
    FeasibilityReport r;
    r.delta_rho = std::numeric_limits<double>::infinity();
    r.lower_margin = std::numeric_limits<double>::infinity();
    r.upper_margin = std::numeric_limits<double>::infinity();
    for (const auto& p : profile.points) {
        const double lo = spec.rho_lower(p.t);
        r.delta_rho = std::min(r.delta_rho, spec.rho_max - lo);
        r.lower_margin = std::min(r.lower_margin, p.value - lo);
        r.upper_margin = std::min(r.upper_margin, spec.rho_max - p.value);
    }
    r.condition_i = r.delta_rho > 0.0;
    r.condition_ii = r.lower_margin > 0.0;
    r.upper_ok = r.upper_margin > 0.0;
    return r;
}

}  // namespace cfunnel
