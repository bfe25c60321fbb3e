#pragma once

// Constraint sets shared by the unit tests.

#include <memory>
#include <string>

#include "cfunnel/constraints.hpp"
#include "cfunnel/metric.hpp"

namespace testing {

using namespace cfunnel;

inline OutputConstraint make(const VariableTable& v, ConstraintKind kind, const std::string& h,
                             const char* lower, const char* upper) {
    OutputConstraint c;
    c.kind = kind;
    c.h = parse(h, v);
    if (lower) c.lower = parse(lower, v);
    if (upper) c.upper = parse(upper, v);
    return c;
}

/// Funnel on x1, LBO on x2 - x1, UBO on 0.3 x1^2 + x2 with the given bounds.
inline std::shared_ptr<const PredicateSet> example1(const char* lo1, const char* hi1,
                                                    const char* lo2, const char* hi3) {
    const auto v = make_variable_table(2);
    return std::make_shared<const PredicateSet>(compile({
        make(v, ConstraintKind::Funnel, "x1", lo1, hi1),
        make(v, ConstraintKind::LowerBoundedOneSided, "x2 - x1", lo2, nullptr),
        make(v, ConstraintKind::UpperBoundedOneSided, "0.3*x1^2 + x2", nullptr, hi3),
    }, 2));
}

/// Frozen-time bounds of the level-set snapshot.
inline std::shared_ptr<const PredicateSet> example1_snapshot() {
    return example1("-2", "2", "-2", "4");
}

/// Time-varying bounds of the closed-loop scenario.
inline std::shared_ptr<const PredicateSet> example1_timevarying() {
    return example1("-2 + 2.5*sin(0.3*t)", "3*sin(0.3*t)", "-cos(0.3*t)", "3.5 - cos(0.3*t)");
}

/// Two funnels on x1 and 0.3 x1^2 - x2.
inline std::shared_ptr<const PredicateSet> example2() {
    const auto v = make_variable_table(2);
    return std::make_shared<const PredicateSet>(compile({
        make(v, ConstraintKind::Funnel, "x1", "-3", "2"),
        make(v, ConstraintKind::Funnel, "0.3*x1^2 - x2", "-3", "1"),
    }, 2));
}

}  // namespace testing
