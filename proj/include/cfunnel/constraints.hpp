#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cfunnel/expr.hpp"

namespace cfunnel {

using VariableTable = std::shared_ptr<const std::vector<std::string>>;

/// Variable table {x1, ..., xn, t}. The time variable sits in slot n.
VariableTable make_variable_table(std::size_t n);

/// Slot layout helper: [x1..xn, t].
std::vector<double> pack(double t, const Eigen::VectorXd& x);

class ConstraintError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ConstraintKind {
    Funnel,                // lower(t) < h(x) < upper(t)
    LowerBoundedOneSided,  // lower(t) < h(x)
    UpperBoundedOneSided,  // h(x) < upper(t)
};

const char* to_string(ConstraintKind kind);
ConstraintKind constraint_kind_from_string(const std::string& s);

/// One output constraint. An absent bound means the side is unconstrained.
struct OutputConstraint {
    ConstraintKind kind = ConstraintKind::Funnel;
    Expr h;
    std::optional<Expr> lower;
    std::optional<Expr> upper;
};

enum class Side { Lower, Upper };

/// psi = h - lower (Side::Lower) or psi = upper - h (Side::Upper).
struct Predicate {
    Expr value;
    std::vector<Expr> grad;  // d psi / d x_j
    Expr dt;                 // d psi / d t
    std::size_t constraint = 0;  // index into PredicateSet::constraints()
    Side side = Side::Lower;
};

/// A constraint after validation, in predicate order (funnels, then LBO, then UBO).
struct CompiledConstraint {
    ConstraintKind kind;
    std::size_t source_index;  // position in the list handed to compile()
    Expr h;
    std::vector<Expr> dh;                  // gradient of h
    std::vector<std::vector<Expr>> d2h;    // Hessian of h
    std::optional<Expr> lower, upper;
    std::optional<Expr> lower_dot, upper_dot;
    /// Sampled min of upper - lower on the horizon (funnels only, else 0).
    double separation = 0.0;
};

struct CompileOptions {
    double horizon = 20.0;
    std::size_t samples = 2001;
    double min_separation = 1e-9;
};

/// The m + p scalar predicates psi_i(t, x) > 0 encoding all output constraints.
class PredicateSet {
public:
    std::size_t dim() const { return n_; }
    /// Number of output constraints m.
    std::size_t m() const { return constraints_.size(); }
    /// Number of funnel constraints p.
    std::size_t p() const { return p_; }
    /// Number of lower-bounded one-sided constraints q.
    std::size_t q() const { return q_; }
    std::size_t size() const { return predicates_.size(); }

    const std::vector<Predicate>& predicates() const { return predicates_; }
    const std::vector<CompiledConstraint>& constraints() const { return constraints_; }
    const VariableTable& variables() const { return vars_; }

    Eigen::VectorXd values(double t, const Eigen::VectorXd& x) const;
    /// Row i is the x-gradient of predicate i.
    Eigen::MatrixXd gradients(double t, const Eigen::VectorXd& x) const;
    Eigen::VectorXd time_derivatives(double t, const Eigen::VectorXd& x) const;

    /// h(x) stacked in constraint order.
    Eigen::VectorXd outputs(const Eigen::VectorXd& x) const;
    /// Jacobian of h, m x n.
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;

    friend PredicateSet compile(const std::vector<OutputConstraint>&, std::size_t,
                                const CompileOptions&);

private:
    std::size_t n_ = 0;
    std::size_t p_ = 0;
    std::size_t q_ = 0;
    VariableTable vars_;
    std::vector<CompiledConstraint> constraints_;
    std::vector<Predicate> predicates_;
};

/// Validate the constraints on [0, horizon] and build the predicate set.
/// All expressions must share one variable table of the form {x1..xn, t}.
PredicateSet compile(const std::vector<OutputConstraint>& constraints, std::size_t n,
                     const CompileOptions& options = {});

inline Eigen::VectorXd psi_values(const PredicateSet& ps, double t, const Eigen::VectorXd& x) {
    return ps.values(t, x);
}

}  // namespace cfunnel
