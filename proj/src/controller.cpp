#include "cfunnel/controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace cfunnel {

void ControllerConfig::validate() const {
    if (!(k > 0.0) || !std::isfinite(k)) {
        throw std::invalid_argument(fmt::format("control gain k must be positive, got {}", k));
    }
    if (!(clamp_margin > 0.0 && clamp_margin <= 1e-6)) {
        throw std::invalid_argument(
            fmt::format("clamp margin must lie in (0, 1e-6], got {}", clamp_margin));
    }
}

double normalize_alpha(const FunnelSpec& spec, double t, double alpha) {
    return (alpha - 0.5 * spec.rho_sum(t)) / (0.5 * spec.rho_diff(t));
}

ClampedValue clamp_normalized(double alpha_hat, double margin) {
    const double hi = 1.0 - margin;
    if (alpha_hat > hi) return {hi, true};
    if (alpha_hat < -hi) return {-hi, true};
    if (std::isnan(alpha_hat)) return {alpha_hat, true};
    return {alpha_hat, false};
}

double transformed_error(double alpha_hat) { return std::log((1.0 + alpha_hat) / (1.0 - alpha_hat)); }

double modulation_gain(const FunnelSpec& spec, double t, double alpha_hat) {
    return 4.0 / (spec.rho_diff(t) * (1.0 - alpha_hat * alpha_hat));
}

double barrier(double epsilon) { return 0.5 * epsilon * epsilon; }

Controller::Controller(std::shared_ptr<const SmoothMetric> metric, FunnelSpec funnel,
                       ControllerConfig config)
    : metric_(std::move(metric)), funnel_(funnel), config_(config) {
    if (!metric_) throw std::invalid_argument("Controller: null metric");
    funnel_.validate();
    config_.validate();
}

ControlEvaluation Controller::control(double t, const Eigen::VectorXd& x) const {
    if (static_cast<std::size_t>(x.size()) != metric_->dim()) {
        throw std::invalid_argument(fmt::format("Controller: state has dimension {}, expected {}",
                                                x.size(), metric_->dim()));
    }
    MetricEvaluation m = metric_->evaluate(t, x);
    ControlEvaluation out;
    out.alpha = m.alpha;
    out.alpha_bar = m.alpha_bar;
    out.psi = std::move(m.psi);
    out.rho_lower = funnel_.rho_lower(t);
    out.rho_upper = funnel_.rho_upper(t);

    const ClampedValue a = clamp_normalized(normalize_alpha(funnel_, t, m.alpha),
                                            config_.clamp_margin);
    out.alpha_hat = a.value;
    out.clamped = a.clamped;
    out.epsilon = transformed_error(a.value);
    out.xi = modulation_gain(funnel_, t, a.value);
    out.V = barrier(out.epsilon);
    out.u = -config_.k * out.xi * out.epsilon * m.grad;
    return out;
}

}  // namespace cfunnel
