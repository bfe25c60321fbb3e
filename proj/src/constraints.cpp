#include "cfunnel/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfunnel {

VariableTable make_variable_table(std::size_t n) {
    std::vector<std::string> names;
    names.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i) names.push_back("x" + std::to_string(i + 1));
    names.push_back("t");
    return std::make_shared<const std::vector<std::string>>(std::move(names));
}

std::vector<double> pack(double t, const Eigen::VectorXd& x) {
    std::vector<double> v(static_cast<std::size_t>(x.size()) + 1);
    for (Eigen::Index i = 0; i < x.size(); ++i) v[static_cast<std::size_t>(i)] = x[i];
    v.back() = t;
    return v;
}

const char* to_string(ConstraintKind kind) {
    switch (kind) {
        case ConstraintKind::Funnel: return "funnel";
        case ConstraintKind::LowerBoundedOneSided: return "lbo";
        case ConstraintKind::UpperBoundedOneSided: return "ubo";
    }
    return "?";
}

ConstraintKind constraint_kind_from_string(const std::string& s) {
    if (s == "funnel") return ConstraintKind::Funnel;
    if (s == "lbo" || s == "lower") return ConstraintKind::LowerBoundedOneSided;
    if (s == "ubo" || s == "upper") return ConstraintKind::UpperBoundedOneSided;
    throw ConstraintError("unknown constraint kind '" + s + "' (expected funnel, lbo or ubo)");
}

namespace {

int kind_rank(ConstraintKind k) {
    switch (k) {
        case ConstraintKind::Funnel: return 0;
        case ConstraintKind::LowerBoundedOneSided: return 1;
        case ConstraintKind::UpperBoundedOneSided: return 2;
    }
    return 3;
}

void require_table(const Expr& e, std::size_t n, const std::string& what) {
    const auto& vars = e.variables();
    if (vars.size() != n + 1 || vars.back() != "t") {
        throw ConstraintError(what + ": expression must be parsed against {x1..x" +
                              std::to_string(n) + ", t}");
    }
}

// Finite value and finite derivative on a dense grid of [0, horizon].
void sample_bound(const Expr& bound, const Expr& dot, std::size_t n, const CompileOptions& opt,
                  const std::string& what, std::vector<double>& out) {
    std::vector<double> slots(n + 1, 0.0);
    const std::size_t count = std::max<std::size_t>(opt.samples, 2);
    out.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double t = opt.horizon * static_cast<double>(k) / static_cast<double>(count - 1);
        slots[n] = t;
        double v = 0.0;
        double d = 0.0;
        try {
            v = bound.eval(slots);
            d = dot.eval(slots);
        } catch (const ExprError& err) {
            throw ConstraintError(what + " is not defined at t=" + std::to_string(t) + ": " +
                                  err.what());
        }
        if (!std::isfinite(v) || !std::isfinite(d)) {
            throw ConstraintError(what + " or its derivative is not finite at t=" +
                                  std::to_string(t));
        }
        out[k] = v;
    }
}

}  // namespace

PredicateSet compile(const std::vector<OutputConstraint>& constraints, std::size_t n,
                     const CompileOptions& options) {
    if (constraints.empty()) throw ConstraintError("at least one output constraint is required");
    if (n == 0) throw ConstraintError("state dimension must be positive");
    if (!(options.horizon >= 0.0)) throw ConstraintError("validation horizon must be >= 0");

    PredicateSet ps;
    ps.n_ = n;
    ps.vars_ = constraints.front().h.variable_table();
    const std::size_t t_slot = n;

    std::vector<std::size_t> order(constraints.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return kind_rank(constraints[a].kind) < kind_rank(constraints[b].kind);
    });

    std::vector<double> lo_samples, hi_samples;
    for (std::size_t src : order) {
        const OutputConstraint& c = constraints[src];
        const std::string label = "constraint " + std::to_string(src + 1) + " (" +
                                  to_string(c.kind) + ")";
        require_table(c.h, n, label + " h");
        if (c.h.depends_on(t_slot)) throw ConstraintError(label + ": h must not depend on t");

        const bool needs_lower = c.kind != ConstraintKind::UpperBoundedOneSided;
        const bool needs_upper = c.kind != ConstraintKind::LowerBoundedOneSided;
        if (needs_lower != c.lower.has_value()) {
            throw ConstraintError(label + (needs_lower ? ": missing lower bound"
                                                       : ": unexpected lower bound"));
        }
        if (needs_upper != c.upper.has_value()) {
            throw ConstraintError(label + (needs_upper ? ": missing upper bound"
                                                       : ": unexpected upper bound"));
        }

        CompiledConstraint cc{c.kind, src, c.h, {}, {}, c.lower, c.upper, {}, {}, 0.0};
        for (std::size_t j = 0; j < n; ++j) cc.dh.push_back(differentiate(c.h, j));
        cc.d2h.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) cc.d2h[j].push_back(differentiate(cc.dh[j], k));
        }
        for (auto* bound : {&cc.lower, &cc.upper}) {
            if (!*bound) continue;
            require_table(**bound, n, label + " bound");
            for (std::size_t j = 0; j < n; ++j) {
                if ((*bound)->depends_on(j)) {
                    throw ConstraintError(label + ": bounds may depend on t only");
                }
            }
        }
        if (cc.lower) {
            cc.lower_dot = differentiate(*cc.lower, t_slot);
            sample_bound(*cc.lower, *cc.lower_dot, n, options, label + " lower bound", lo_samples);
        }
        if (cc.upper) {
            cc.upper_dot = differentiate(*cc.upper, t_slot);
            sample_bound(*cc.upper, *cc.upper_dot, n, options, label + " upper bound", hi_samples);
        }
        if (c.kind == ConstraintKind::Funnel) {
            double sep = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < lo_samples.size(); ++k) {
                sep = std::min(sep, hi_samples[k] - lo_samples[k]);
            }
            if (!(sep > options.min_separation)) {
                throw ConstraintError(label + ": funnel bounds not separated on [0, " +
                                      std::to_string(options.horizon) +
                                      "] (min upper - lower = " + std::to_string(sep) + ")");
            }
            cc.separation = sep;
            ++ps.p_;
        } else if (c.kind == ConstraintKind::LowerBoundedOneSided) {
            ++ps.q_;
        }
        ps.constraints_.push_back(std::move(cc));
    }

    for (std::size_t ci = 0; ci < ps.constraints_.size(); ++ci) {
        const CompiledConstraint& cc = ps.constraints_[ci];
        auto add = [&](Side side) {
            NodePtr v = side == Side::Lower ? build::sub(cc.h.root_ptr(), cc.lower->root_ptr())
                                            : build::sub(cc.upper->root_ptr(), cc.h.root_ptr());
            Predicate pr{Expr(v, ps.vars_), {}, Expr(), ci, side};
            for (std::size_t j = 0; j < n; ++j) pr.grad.push_back(differentiate(pr.value, j));
            pr.dt = differentiate(pr.value, t_slot);
            ps.predicates_.push_back(std::move(pr));
        };
        if (cc.lower) add(Side::Lower);
        if (cc.upper) add(Side::Upper);
    }
    return ps;
}

Eigen::VectorXd PredicateSet::values(double t, const Eigen::VectorXd& x) const {
    const auto slots = pack(t, x);
    Eigen::VectorXd out(static_cast<Eigen::Index>(predicates_.size()));
    for (std::size_t i = 0; i < predicates_.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = predicates_[i].value.eval(slots);
    }
    return out;
}

Eigen::MatrixXd PredicateSet::gradients(double t, const Eigen::VectorXd& x) const {
    const auto slots = pack(t, x);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(predicates_.size()),
                        static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < predicates_.size(); ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                predicates_[i].grad[j].eval(slots);
        }
    }
    return out;
}

Eigen::VectorXd PredicateSet::time_derivatives(double t, const Eigen::VectorXd& x) const {
    const auto slots = pack(t, x);
    Eigen::VectorXd out(static_cast<Eigen::Index>(predicates_.size()));
    for (std::size_t i = 0; i < predicates_.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = predicates_[i].dt.eval(slots);
    }
    return out;
}

Eigen::VectorXd PredicateSet::outputs(const Eigen::VectorXd& x) const {
    const auto slots = pack(0.0, x);
    Eigen::VectorXd out(static_cast<Eigen::Index>(constraints_.size()));
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = constraints_[i].h.eval(slots);
    }
    return out;
}

Eigen::MatrixXd PredicateSet::jacobian(const Eigen::VectorXd& x) const {
    const auto slots = pack(0.0, x);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(constraints_.size()),
                        static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                constraints_[i].dh[j].eval(slots);
        }
    }
    return out;
}

}  // namespace cfunnel
