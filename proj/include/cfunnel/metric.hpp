#pragma once

#include <memory>

#include <Eigen/Dense>

#include "cfunnel/constraints.hpp"

namespace cfunnel {

/// alpha, alpha_bar and the analytic gradient at one (t, x).
struct MetricEvaluation {
    double alpha = 0.0;
    double alpha_bar = 0.0;
    Eigen::VectorXd psi;
    Eigen::VectorXd grad;
};

/// Signed distance to the constrained set and its smooth log-sum-exp
/// under-approximation:
///
///   alpha_bar(t, x) = min_i psi_i(t, x)
///   alpha(t, x)     = -(1/nu) ln sum_i exp(-nu psi_i(t, x))
///
/// so that alpha <= alpha_bar <= alpha + ln(m + p) / nu. All exponentials are
/// taken after shifting by min_i psi_i, which keeps every term in (0, 1].
class SmoothMetric {
public:
    SmoothMetric(std::shared_ptr<const PredicateSet> predicates, double nu);

    double nu() const { return nu_; }
    std::size_t dim() const { return predicates_->dim(); }
    const PredicateSet& predicates() const { return *predicates_; }
    const std::shared_ptr<const PredicateSet>& predicate_set() const { return predicates_; }

    double alpha_bar(double t, const Eigen::VectorXd& x) const;
    double alpha(double t, const Eigen::VectorXd& x) const;

    /// Gradient in x assembled per output constraint: J(x)^T gamma(t, x) e^{nu alpha}.
    Eigen::VectorXd grad_alpha_x(double t, const Eigen::VectorXd& x) const;

    /// Gradient in x as the softmin-weighted sum of the symbolic predicate
    /// gradients. Independent of grad_alpha_x; used as a cross-check.
    Eigen::VectorXd grad_alpha_x_from_predicates(double t, const Eigen::VectorXd& x) const;

    double dalpha_dt(double t, const Eigen::VectorXd& x) const;

    /// Full Hessian in x from symbolic second derivatives of h.
    Eigen::MatrixXd hessian(double t, const Eigen::VectorXd& x) const;

    /// alpha, alpha_bar, psi and grad_alpha_x in one pass.
    MetricEvaluation evaluate(double t, const Eigen::VectorXd& x) const;

    /// Softmin weights exp(-nu psi_i) / sum_j exp(-nu psi_j); they sum to one.
    Eigen::VectorXd weights(const Eigen::VectorXd& psi) const;

    /// -(1/nu) ln sum exp(-nu psi_i), shifted.
    double soft_min(const Eigen::VectorXd& psi) const;

private:
    std::shared_ptr<const PredicateSet> predicates_;
    double nu_;
};

}  // namespace cfunnel
