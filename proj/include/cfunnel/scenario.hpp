#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfunnel/checks.hpp"
#include "cfunnel/constraints.hpp"
#include "cfunnel/controller.hpp"
#include "cfunnel/funnel.hpp"
#include "cfunnel/metric.hpp"
#include "cfunnel/optimizer.hpp"
#include "cfunnel/sim.hpp"

namespace cfunnel {

class ScenarioError : public std::runtime_error {
public:
    enum class Kind { Io, Syntax, Validation };

    ScenarioError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct ConstraintEntry {
    std::string kind;  // funnel | lbo | ubo
    std::string h;
    std::optional<std::string> lower;
    std::optional<std::string> upper;

    bool operator==(const ConstraintEntry&) const = default;
};

/// Raw scenario file contents; expressions are kept as text.
struct Scenario {
    // [system]
    std::size_t dim = 0;
    std::vector<std::string> f;
    std::vector<std::vector<std::string>> g;
    std::vector<std::string> w;
    std::vector<double> x0;
    // [[constraint]]
    std::vector<ConstraintEntry> constraints;
    // [metric]
    double nu = 10.0;
    // [funnel]; an absent rho_0 means "auto"
    std::optional<double> rho_max;
    double rho_inf = 0.0;
    std::optional<double> rho_0;
    double beta = 0.5;
    double T = 1.0;
    // [controller]
    double k = 1.0;
    // [sim]
    double t_end = 20.0;
    double dt = 1e-3;
    std::size_t record_every = 10;
    std::uint64_t seed = 1;
    // [analysis]
    std::size_t starts = 32;
    double free_half_width = 10.0;
    double sample_half_width = 10.0;

    bool operator==(const Scenario&) const = default;
};

Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario read_scenario(const std::string& path);
/// Canonical TOML; parse_scenario(to_toml(s)) == s.
std::string to_toml(const Scenario& s);

/// A scenario with every expression parsed and every cross-module invariant
/// checked.
struct Problem {
    Scenario scenario;
    VariableTable variables;
    std::vector<OutputConstraint> constraints;
    std::shared_ptr<const PredicateSet> predicates;
    std::shared_ptr<const SmoothMetric> metric;
    Plant plant;
    double alpha0 = 0.0;
    FunnelSpec funnel;
    ControllerConfig controller_config;
    InputGainReport input_gain;
    std::optional<RadialReport> coercivity;
    /// Non-fatal findings (e.g. coercivity WARN/FAIL).
    std::vector<std::string> warnings;

    Controller controller() const;
    SimOptions sim_options() const;
    AscentOptions ascent_options() const;
    RadialOptions radial_options() const;
    SampleOptions sample_options() const;
};

struct BuildOptions {
    bool check_coercivity = true;
};

/// Throws ScenarioError (Kind::Validation) naming the offending key or the
/// violated assumption.
Problem build_problem(const Scenario& scenario, const BuildOptions& options = {});

/// Everything `cfunnel check` reports.
struct CheckSummary {
    InputGainReport input_gain;
    RadialReport coercivity;
    InvexityIReport invexity_I;
    InvexityIIReport invexity_II;
    /// Conditions I and II are alternative sufficient conditions: PASS if
    /// either passes, WARN otherwise.
    Verdict invexity = Verdict::Pass;
    OptProfile profile;
    FeasibilityReport feasibility;
    Verdict feasibility_verdict = Verdict::Pass;

    /// False iff input gain, coercivity or feasibility FAILed.
    bool ok() const;
};

/// sweep_dt is the alpha_opt grid step over [0, t_end].
CheckSummary run_checks(const Problem& problem, double sweep_dt = 0.1);

inline Problem load(const std::string& path, const BuildOptions& options = {}) {
    return build_problem(read_scenario(path), options);
}

}  // namespace cfunnel
