#pragma once

#include <memory>

#include <Eigen/Dense>

#include "cfunnel/funnel.hpp"
#include "cfunnel/metric.hpp"

namespace cfunnel {

struct ControllerConfig {
    double k = 1.0;
    /// alpha_hat is clamped to [-1 + clamp_margin, 1 - clamp_margin].
    double clamp_margin = 1e-12;

    void validate() const;
};

struct ControlEvaluation {
    Eigen::VectorXd u;
    double alpha = 0.0;
    double alpha_bar = 0.0;
    double alpha_hat = 0.0;
    double epsilon = 0.0;
    double xi = 0.0;
    double V = 0.0;
    double rho_lower = 0.0;
    double rho_upper = 0.0;
    Eigen::VectorXd psi;
    bool clamped = false;
};

/// Normalised position of alpha in the funnel: -1 at the lower wall, +1 at
/// the upper wall.
double normalize_alpha(const FunnelSpec& spec, double t, double alpha);

struct ClampedValue {
    double value;
    bool clamped;
};
ClampedValue clamp_normalized(double alpha_hat, double margin);

/// ln((1 + a) / (1 - a)); caller guarantees |a| < 1.
double transformed_error(double alpha_hat);

/// d epsilon / d alpha = 4 / (rho_d (1 - a^2)).
double modulation_gain(const FunnelSpec& spec, double t, double alpha_hat);

/// 0.5 epsilon^2, for logging.
double barrier(double epsilon);

/// Model-free funnel feedback  u = -k xi epsilon grad_x alpha.
///
/// Sees only (t, x), the metric and the funnel. It holds no reference to the
/// plant.
class Controller {
public:
    Controller(std::shared_ptr<const SmoothMetric> metric, FunnelSpec funnel,
               ControllerConfig config);

    ControlEvaluation control(double t, const Eigen::VectorXd& x) const;

    double alpha_hat(double t, double alpha) const { return normalize_alpha(funnel_, t, alpha); }
    double xi(double t, double alpha_hat) const { return modulation_gain(funnel_, t, alpha_hat); }

    const SmoothMetric& metric() const { return *metric_; }
    const FunnelSpec& funnel() const { return funnel_; }
    const ControllerConfig& config() const { return config_; }

private:
    std::shared_ptr<const SmoothMetric> metric_;
    FunnelSpec funnel_;
    ControllerConfig config_;
};

}  // namespace cfunnel
