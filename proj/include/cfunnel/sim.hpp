#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cfunnel/checks.hpp"
#include "cfunnel/controller.hpp"

namespace cfunnel {

/// Input-affine plant  x' = f(x) + g(x) u + w(t).
struct Plant {
    std::size_t n = 0;
    std::vector<Expr> f;               // length n, functions of x
    std::vector<std::vector<Expr>> g;  // n x n, functions of x
    std::vector<Expr> w;               // length n, functions of t
    Eigen::VectorXd x0;

    /// Dimension and variable-dependence checks; throws std::invalid_argument.
    void validate() const;

    Eigen::VectorXd drift(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd gain(const Eigen::VectorXd& x) const;
    Eigen::VectorXd disturbance(double t) const;
};

/// f(x) + g(x) u + w(t).
Eigen::VectorXd plant_rhs(const Plant& plant, double t, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& u);

/// Closed-loop right-hand side with u from the controller.
Eigen::VectorXd rhs(const Plant& plant, const Controller& controller, double t,
                    const Eigen::VectorXd& x);

using OdeFunction = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

/// One classical fourth-order Runge-Kutta step.
Eigen::VectorXd rk4_step(const OdeFunction& f, double t, const Eigen::VectorXd& x, double h);

/// Fixed-step RK4 from t0 to t1 using round((t1 - t0) / h) steps.
Eigen::VectorXd rk4_integrate(const OdeFunction& f, double t0, double t1,
                              const Eigen::VectorXd& x0, double h);

struct InputGainOptions {
    std::size_t samples = 500;
    double half_width = 5.0;
    double floor = 1e-9;
    std::uint64_t seed = 5;
};

struct InputGainReport {
    Verdict verdict = Verdict::Pass;
    /// min eigenvalue of (g + g^T) / 2 over the samples.
    double min_eigenvalue = 0.0;
    Eigen::VectorXd worst_state;
};

InputGainReport check_input_gain(const Plant& plant, const InputGainOptions& options = {});

/// max |w(t)| on a uniform grid of [0, horizon].
double disturbance_bound(const Plant& plant, double horizon, std::size_t samples = 2001);

struct SimOptions {
    double t_end = 20.0;
    double dt = 1e-3;
    std::size_t record_every = 10;
    /// Abort when alpha leaves the funnel by more than this fraction of rho_d.
    double breach_guard = 0.01;
};

struct TrajectorySample {
    double t = 0.0;
    Eigen::VectorXd x;
    ControlEvaluation control;
};

struct SimEvents {
    /// First step time with alpha_bar > 0, negative if never.
    double first_alpha_bar_positive = -1.0;
    /// Last step time with alpha_bar <= 0, negative if never.
    double last_alpha_bar_nonpositive = -1.0;
    std::size_t breaches = 0;
    std::size_t clamps = 0;
    std::size_t steps = 0;
    double min_lower_margin = 0.0;  // min alpha - lower
    double min_upper_margin = 0.0;  // min upper - alpha
    /// Minima over steps with t > T (alpha_bar) and t >= T (alpha); +inf if none.
    double min_alpha_bar_after_T = 0.0;
    double min_alpha_after_T = 0.0;
};

enum class SimStatus { Completed, NonFinite, FunnelBreach };
const char* to_string(SimStatus s);

struct SimResult {
    SimStatus status = SimStatus::Completed;
    std::string message;
    std::vector<TrajectorySample> samples;
    SimEvents events;
    double runtime_seconds = 0.0;

    bool ok() const { return status == SimStatus::Completed; }
};

/// Fixed-step RK4 closed-loop simulation from plant.x0. Every step is checked
/// for events; every record_every-th step (and the last) is recorded.
SimResult integrate(const Plant& plant, const Controller& controller, const SimOptions& options);

/// Header: t,x1..xn,u1..un,alpha,alpha_bar,alpha_hat,eps,xi,V,rho_lo,rho_hi,psi_1..psi_k,clamped
void write_trajectory_csv(std::ostream& os, const std::vector<TrajectorySample>& samples);

}  // namespace cfunnel
