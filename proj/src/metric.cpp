#include "cfunnel/metric.hpp"

#include <cmath>
#include <stdexcept>

namespace cfunnel {

SmoothMetric::SmoothMetric(std::shared_ptr<const PredicateSet> predicates, double nu)
    : predicates_(std::move(predicates)), nu_(nu) {
    if (!predicates_) throw std::invalid_argument("SmoothMetric: null predicate set");
    if (!(nu_ > 0.0) || !std::isfinite(nu_)) {
        throw std::invalid_argument("SmoothMetric: nu must be a positive finite number");
    }
}

double SmoothMetric::soft_min(const Eigen::VectorXd& psi) const {
    const double lo = psi.minCoeff();
    const double sum = (-nu_ * (psi.array() - lo)).exp().sum();
    return lo - std::log(sum) / nu_;
}

Eigen::VectorXd SmoothMetric::weights(const Eigen::VectorXd& psi) const {
    const double lo = psi.minCoeff();
    Eigen::VectorXd w = (-nu_ * (psi.array() - lo)).exp().matrix();
    return w / w.sum();
}

double SmoothMetric::alpha_bar(double t, const Eigen::VectorXd& x) const {
    return predicates_->values(t, x).minCoeff();
}

double SmoothMetric::alpha(double t, const Eigen::VectorXd& x) const {
    return soft_min(predicates_->values(t, x));
}

Eigen::VectorXd SmoothMetric::grad_alpha_x(double t, const Eigen::VectorXd& x) const {
    return evaluate(t, x).grad;
}

MetricEvaluation SmoothMetric::evaluate(double t, const Eigen::VectorXd& x) const {
    const auto& cons = predicates_->constraints();
    const std::size_t n = predicates_->dim();
    const auto slots = pack(t, x);

    // Per-constraint lower/upper predicate values from h and the bounds.
    const std::size_t m = cons.size();
    Eigen::VectorXd lo_gap = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), INFINITY);
    Eigen::VectorXd hi_gap = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), INFINITY);
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    double lowest = INFINITY;
    for (std::size_t i = 0; i < m; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double h = cons[i].h.eval(slots);
        if (cons[i].lower) {
            lo_gap[ii] = h - cons[i].lower->eval(slots);
            lowest = std::min(lowest, lo_gap[ii]);
        }
        if (cons[i].upper) {
            hi_gap[ii] = cons[i].upper->eval(slots) - h;
            lowest = std::min(lowest, hi_gap[ii]);
        }
        for (std::size_t j = 0; j < n; ++j) {
            jac(ii, static_cast<Eigen::Index>(j)) = cons[i].dh[j].eval(slots);
        }
    }

    // gamma_i scaled by exp(nu * lowest); exp(-inf) = 0 drops absent sides.
    Eigen::VectorXd gamma(static_cast<Eigen::Index>(m));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i) {
        const double el = std::exp(-nu_ * (lo_gap[i] - lowest));
        const double eu = std::exp(-nu_ * (hi_gap[i] - lowest));
        gamma[i] = el - eu;
        sum += el + eu;
    }

    MetricEvaluation out;
    out.alpha = lowest - std::log(sum) / nu_;
    out.alpha_bar = lowest;
    out.grad = jac.transpose() * gamma / sum;
    out.psi.resize(static_cast<Eigen::Index>(predicates_->size()));
    const auto& preds = predicates_->predicates();
    for (std::size_t k = 0; k < preds.size(); ++k) {
        const auto ci = static_cast<Eigen::Index>(preds[k].constraint);
        out.psi[static_cast<Eigen::Index>(k)] =
            preds[k].side == Side::Lower ? lo_gap[ci] : hi_gap[ci];
    }
    return out;
}

Eigen::VectorXd SmoothMetric::grad_alpha_x_from_predicates(double t,
                                                           const Eigen::VectorXd& x) const {
    const Eigen::VectorXd w = weights(predicates_->values(t, x));
    return predicates_->gradients(t, x).transpose() * w;
}

double SmoothMetric::dalpha_dt(double t, const Eigen::VectorXd& x) const {
    const Eigen::VectorXd w = weights(predicates_->values(t, x));
    return w.dot(predicates_->time_derivatives(t, x));
}

Eigen::MatrixXd SmoothMetric::hessian(double t, const Eigen::VectorXd& x) const {
    const std::size_t n = predicates_->dim();
    const auto ni = static_cast<Eigen::Index>(n);
    const auto slots = pack(t, x);
    const Eigen::VectorXd w = weights(predicates_->values(t, x));
    const Eigen::MatrixXd grads = predicates_->gradients(t, x);
    const Eigen::VectorXd g = grads.transpose() * w;

    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(ni, ni);
    const auto& preds = predicates_->predicates();
    const auto& cons = predicates_->constraints();
    for (std::size_t k = 0; k < preds.size(); ++k) {
        const auto ki = static_cast<Eigen::Index>(k);
        const CompiledConstraint& c = cons[preds[k].constraint];
        const double sign = preds[k].side == Side::Lower ? 1.0 : -1.0;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                hess(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
                    w[ki] * sign * c.d2h[a][b].eval(slots);
            }
        }
        const Eigen::VectorXd gk = grads.row(ki).transpose();
        hess -= nu_ * w[ki] * gk * gk.transpose();
    }
    hess += nu_ * g * g.transpose();
    return hess;
}

}  // namespace cfunnel
