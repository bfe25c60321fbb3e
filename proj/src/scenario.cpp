#include "cfunnel/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <toml.hpp>

namespace cfunnel {

namespace {

[[noreturn]] void invalid(const std::string& msg) {
    throw ScenarioError(ScenarioError::Kind::Validation, msg);
}

void reject_unknown_keys(const toml::table& tbl, const std::string& path,
                         const std::set<std::string>& allowed) {
    for (const auto& [key, node] : tbl) {
        if (!allowed.count(std::string(key.str()))) {
            invalid(fmt::format("unknown key '{}{}{}'", path, path.empty() ? "" : ".", key.str()));
        }
    }
}

const toml::table* sub_table(const toml::table& root, const char* name, bool required) {
    const toml::node* n = root.get(name);
    if (!n) {
        if (required) invalid(fmt::format("missing table [{}]", name));
        return nullptr;
    }
    const toml::table* t = n->as_table();
    if (!t) invalid(fmt::format("'{}' must be a table", name));
    return t;
}

double get_number(const toml::table& tbl, const std::string& path, const char* key,
                  std::optional<double> fallback) {
    const toml::node* n = tbl.get(key);
    if (!n) {
        if (!fallback) invalid(fmt::format("missing key '{}.{}'", path, key));
        return *fallback;
    }
    if (auto v = n->value<double>(); v && (n->is_floating_point() || n->is_integer())) return *v;
    invalid(fmt::format("'{}.{}' must be a number", path, key));
}

std::int64_t get_integer(const toml::table& tbl, const std::string& path, const char* key,
                         std::optional<std::int64_t> fallback) {
    const toml::node* n = tbl.get(key);
    if (!n) {
        if (!fallback) invalid(fmt::format("missing key '{}.{}'", path, key));
        return *fallback;
    }
    if (auto v = n->value_exact<std::int64_t>()) return *v;
    invalid(fmt::format("'{}.{}' must be an integer", path, key));
}

std::string get_string(const toml::node& n, const std::string& path) {
    if (auto v = n.value_exact<std::string>()) return *v;
    invalid(fmt::format("'{}' must be a string", path));
}

std::vector<std::string> get_string_array(const toml::table& tbl, const std::string& path,
                                          const char* key) {
    const toml::array* arr = tbl.get_as<toml::array>(key);
    if (!arr) invalid(fmt::format("'{}.{}' must be an array of strings", path, key));
    std::vector<std::string> out;
    for (std::size_t i = 0; i < arr->size(); ++i) {
        out.push_back(get_string(*arr->get(i), fmt::format("{}.{}[{}]", path, key, i)));
    }
    return out;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& source) {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& err) {
        const auto& b = err.source().begin;
        throw ScenarioError(ScenarioError::Kind::Syntax,
                            fmt::format("{}:{}:{}: {}", source, b.line, b.column,
                                        std::string(err.description())));
    }
    reject_unknown_keys(root, "",
                        {"system", "constraint", "metric", "funnel", "controller", "sim",
                         "analysis"});

    Scenario s;
    const toml::table* sys = sub_table(root, "system", true);
    reject_unknown_keys(*sys, "system", {"dim", "f", "g", "w", "x0"});
    const std::int64_t dim = get_integer(*sys, "system", "dim", std::nullopt);
    if (dim <= 0) invalid("'system.dim' must be positive");
    s.dim = static_cast<std::size_t>(dim);
    s.f = get_string_array(*sys, "system", "f");
    s.w = get_string_array(*sys, "system", "w");
    const toml::array* g = sys->get_as<toml::array>("g");
    if (!g) invalid("'system.g' must be an array of arrays of strings");
    for (std::size_t i = 0; i < g->size(); ++i) {
        const toml::array* row = g->get(i)->as_array();
        if (!row) invalid(fmt::format("'system.g[{}]' must be an array of strings", i));
        std::vector<std::string> r;
        for (std::size_t j = 0; j < row->size(); ++j) {
            r.push_back(get_string(*row->get(j), fmt::format("system.g[{}][{}]", i, j)));
        }
        s.g.push_back(std::move(r));
    }
    const toml::array* x0 = sys->get_as<toml::array>("x0");
    if (!x0) invalid("'system.x0' must be an array of numbers");
    for (std::size_t i = 0; i < x0->size(); ++i) {
        auto v = x0->get(i)->value<double>();
        if (!v) invalid(fmt::format("'system.x0[{}]' must be a number", i));
        s.x0.push_back(*v);
    }

    const toml::array* cons = root.get_as<toml::array>("constraint");
    if (!cons || cons->empty()) invalid("at least one [[constraint]] table is required");
    for (std::size_t i = 0; i < cons->size(); ++i) {
        const std::string path = fmt::format("constraint[{}]", i);
        const toml::table* c = cons->get(i)->as_table();
        if (!c) invalid(fmt::format("'{}' must be a table", path));
        reject_unknown_keys(*c, path, {"kind", "h", "lower", "upper"});
        ConstraintEntry e;
        const toml::node* kind = c->get("kind");
        const toml::node* h = c->get("h");
        if (!kind) invalid(fmt::format("missing key '{}.kind'", path));
        if (!h) invalid(fmt::format("missing key '{}.h'", path));
        e.kind = get_string(*kind, path + ".kind");
        e.h = get_string(*h, path + ".h");
        if (const toml::node* lo = c->get("lower")) e.lower = get_string(*lo, path + ".lower");
        if (const toml::node* hi = c->get("upper")) e.upper = get_string(*hi, path + ".upper");
        s.constraints.push_back(std::move(e));
    }

    if (const toml::table* m = sub_table(root, "metric", false)) {
        reject_unknown_keys(*m, "metric", {"nu"});
        s.nu = get_number(*m, "metric", "nu", s.nu);
    }
    const toml::table* fun = sub_table(root, "funnel", true);
    reject_unknown_keys(*fun, "funnel", {"rho_max", "rho_inf", "rho_0", "beta", "T"});
    if (fun->get("rho_max")) s.rho_max = get_number(*fun, "funnel", "rho_max", std::nullopt);
    s.rho_inf = get_number(*fun, "funnel", "rho_inf", s.rho_inf);
    s.beta = get_number(*fun, "funnel", "beta", s.beta);
    s.T = get_number(*fun, "funnel", "T", std::nullopt);
    if (const toml::node* r0 = fun->get("rho_0")) {
        if (auto txt = r0->value_exact<std::string>()) {
            if (*txt != "auto") invalid("'funnel.rho_0' must be a number or \"auto\"");
        } else {
            s.rho_0 = get_number(*fun, "funnel", "rho_0", std::nullopt);
        }
    }
    if (const toml::table* c = sub_table(root, "controller", false)) {
        reject_unknown_keys(*c, "controller", {"k"});
        s.k = get_number(*c, "controller", "k", s.k);
    }
    if (const toml::table* sim = sub_table(root, "sim", false)) {
        reject_unknown_keys(*sim, "sim", {"t_end", "dt", "record_every", "seed"});
        s.t_end = get_number(*sim, "sim", "t_end", s.t_end);
        s.dt = get_number(*sim, "sim", "dt", s.dt);
        const auto every = get_integer(*sim, "sim", "record_every",
                                       static_cast<std::int64_t>(s.record_every));
        if (every <= 0) invalid("'sim.record_every' must be positive");
        s.record_every = static_cast<std::size_t>(every);
        s.seed = static_cast<std::uint64_t>(
            get_integer(*sim, "sim", "seed", static_cast<std::int64_t>(s.seed)));
    }
    if (const toml::table* a = sub_table(root, "analysis", false)) {
        reject_unknown_keys(*a, "analysis", {"starts", "free_half_width", "sample_half_width"});
        const auto starts =
            get_integer(*a, "analysis", "starts", static_cast<std::int64_t>(s.starts));
        if (starts <= 0) invalid("'analysis.starts' must be positive");
        s.starts = static_cast<std::size_t>(starts);
        s.free_half_width = get_number(*a, "analysis", "free_half_width", s.free_half_width);
        s.sample_half_width = get_number(*a, "analysis", "sample_half_width", s.sample_half_width);
    }
    return s;
}

Scenario read_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError(ScenarioError::Kind::Io, "cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path);
}

std::string to_toml(const Scenario& s) {
    auto strings = [](const std::vector<std::string>& v) {
        toml::array a;
        for (const auto& x : v) a.push_back(x);
        return a;
    };
    toml::table root;

    toml::table sys;
    sys.insert("dim", static_cast<std::int64_t>(s.dim));
    sys.insert("f", strings(s.f));
    toml::array g;
    for (const auto& row : s.g) g.push_back(strings(row));
    sys.insert("g", std::move(g));
    sys.insert("w", strings(s.w));
    toml::array x0;
    for (double v : s.x0) x0.push_back(v);
    sys.insert("x0", std::move(x0));
    root.insert("system", std::move(sys));

    toml::array cons;
    for (const auto& c : s.constraints) {
        toml::table t;
        t.insert("kind", c.kind);
        t.insert("h", c.h);
        if (c.lower) t.insert("lower", *c.lower);
        if (c.upper) t.insert("upper", *c.upper);
        cons.push_back(std::move(t));
    }
    root.insert("constraint", std::move(cons));

    root.insert("metric", toml::table{{"nu", s.nu}});

    toml::table fun;
    if (s.rho_max) fun.insert("rho_max", *s.rho_max);
    fun.insert("rho_inf", s.rho_inf);
    if (s.rho_0) {
        fun.insert("rho_0", *s.rho_0);
    } else {
        fun.insert("rho_0", "auto");
    }
    fun.insert("beta", s.beta);
    fun.insert("T", s.T);
    root.insert("funnel", std::move(fun));

    root.insert("controller", toml::table{{"k", s.k}});
    root.insert("sim", toml::table{{"t_end", s.t_end},
                                   {"dt", s.dt},
                                   {"record_every", static_cast<std::int64_t>(s.record_every)},
                                   {"seed", static_cast<std::int64_t>(s.seed)}});
    root.insert("analysis", toml::table{{"starts", static_cast<std::int64_t>(s.starts)},
                                        {"free_half_width", s.free_half_width},
                                        {"sample_half_width", s.sample_half_width}});
    std::ostringstream os;
    os << root << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------

Controller Problem::controller() const { return Controller(metric, funnel, controller_config); }

SimOptions Problem::sim_options() const {
    SimOptions o;
    o.t_end = scenario.t_end;
    o.dt = scenario.dt;
    o.record_every = scenario.record_every;
    return o;
}

AscentOptions Problem::ascent_options() const {
    AscentOptions o;
    o.starts = scenario.starts;
    o.free_half_width = scenario.free_half_width;
    o.seed = scenario.seed;
    return o;
}

RadialOptions Problem::radial_options() const {
    RadialOptions o;
    o.seed = scenario.seed;
    o.times.clear();
    constexpr int kTimes = 5;
    for (int i = 0; i < kTimes; ++i) o.times.push_back(scenario.t_end * i / (kTimes - 1));
    return o;
}

SampleOptions Problem::sample_options() const {
    SampleOptions o;
    o.half_width = scenario.sample_half_width;
    o.seed = scenario.seed;
    return o;
}

namespace {

Expr parse_at(const std::string& text, const VariableTable& vars, const std::string& path) {
    try {
        return parse(text, vars);
    } catch (const ExprError& e) {
        invalid(fmt::format("{}: {}", path, e.what()));
    }
}

}  // namespace

Problem build_problem(const Scenario& scenario, const BuildOptions& options) {
    Problem pb;
    pb.scenario = scenario;
    const Scenario& s = scenario;
    const std::size_t n = s.dim;
    pb.variables = make_variable_table(n);

    if (s.f.size() != n) invalid(fmt::format("'system.f' has {} entries, expected {}", s.f.size(), n));
    if (s.w.size() != n) invalid(fmt::format("'system.w' has {} entries, expected {}", s.w.size(), n));
    if (s.x0.size() != n) invalid(fmt::format("'system.x0' has {} entries, expected {}", s.x0.size(), n));
    if (s.g.size() != n) invalid(fmt::format("'system.g' has {} rows, expected {}", s.g.size(), n));
    if (!(s.t_end > 0.0)) invalid("'sim.t_end' must be positive");
    if (!(s.dt > 0.0) || s.dt > s.t_end) invalid("'sim.dt' must lie in (0, t_end]");
    if (!(s.nu > 0.0)) invalid("'metric.nu' must be positive");

    Plant& plant = pb.plant;
    plant.n = n;
    for (std::size_t i = 0; i < n; ++i) {
        plant.f.push_back(parse_at(s.f[i], pb.variables, fmt::format("system.f[{}]", i)));
        plant.w.push_back(parse_at(s.w[i], pb.variables, fmt::format("system.w[{}]", i)));
        if (s.g[i].size() != n) invalid(fmt::format("'system.g[{}]' must have {} entries", i, n));
        std::vector<Expr> row;
        for (std::size_t j = 0; j < n; ++j) {
            row.push_back(parse_at(s.g[i][j], pb.variables, fmt::format("system.g[{}][{}]", i, j)));
        }
        plant.g.push_back(std::move(row));
    }
    plant.x0 = Eigen::Map<const Eigen::VectorXd>(s.x0.data(), static_cast<Eigen::Index>(n));
    try {
        plant.validate();
    } catch (const std::invalid_argument& e) {
        invalid(fmt::format("system: {}", e.what()));
    }

    for (std::size_t i = 0; i < s.constraints.size(); ++i) {
        const ConstraintEntry& c = s.constraints[i];
        const std::string path = fmt::format("constraint[{}]", i);
        OutputConstraint oc;
        try {
            oc.kind = constraint_kind_from_string(c.kind);
        } catch (const ConstraintError& e) {
            invalid(fmt::format("{}.kind: {}", path, e.what()));
        }
        oc.h = parse_at(c.h, pb.variables, path + ".h");
        if (c.lower) oc.lower = parse_at(*c.lower, pb.variables, path + ".lower");
        if (c.upper) oc.upper = parse_at(*c.upper, pb.variables, path + ".upper");
        pb.constraints.push_back(std::move(oc));
    }
    CompileOptions copt;
    copt.horizon = s.t_end;
    try {
        pb.predicates = std::make_shared<const PredicateSet>(compile(pb.constraints, n, copt));
        pb.metric = std::make_shared<const SmoothMetric>(pb.predicates, s.nu);
    } catch (const ConstraintError& e) {
        invalid(e.what());
    }

    InputGainOptions gopt;
    gopt.half_width = s.sample_half_width;
    gopt.seed = s.seed;
    pb.input_gain = check_input_gain(plant, gopt);
    if (pb.input_gain.verdict == Verdict::Fail) {
        invalid(fmt::format("input gain check failed: (g + g^T)/2 is not positive definite, "
                            "min eigenvalue is {:.6g} (needs >= 1e-9)",
                            pb.input_gain.min_eigenvalue));
    }

    try {
        pb.alpha0 = pb.metric->alpha(0.0, plant.x0);
    } catch (const ExprError& e) {
        invalid(fmt::format("alpha(0, x0) is undefined: {}", e.what()));
    }

    FunnelRequest req;
    req.rho_0 = s.rho_0;
    req.rho_inf = s.rho_inf;
    req.T = s.T;
    req.beta = s.beta;
    req.rho_max = s.rho_max;
    try {
        pb.funnel = design(pb.alpha0, req);
    } catch (const FunnelError& e) {
        invalid(fmt::format("funnel: {}", e.what()));
    }
    const double width = min_width(pb.funnel, s.t_end);
    if (!(width > 0.0)) {
        invalid(fmt::format("funnel condition (i) violated: rho_max - lower(t) reaches {:.6g}",
                            width));
    }

    pb.controller_config.k = s.k;
    try {
        pb.controller_config.validate();
    } catch (const std::invalid_argument& e) {
        invalid(fmt::format("controller: {}", e.what()));
    }

    if (options.check_coercivity) {
        pb.coercivity = check_coercivity(*pb.metric, pb.radial_options());
        if (pb.coercivity->verdict != Verdict::Pass) {
            pb.warnings.push_back(fmt::format("coercivity {}: {}", to_string(pb.coercivity->verdict),
                                              pb.coercivity->message));
        }
    }
    return pb;
}

bool CheckSummary::ok() const {
    return input_gain.verdict != Verdict::Fail && coercivity.verdict != Verdict::Fail &&
           feasibility_verdict != Verdict::Fail;
}

CheckSummary run_checks(const Problem& pb, double sweep_dt) {
    CheckSummary out;
    out.input_gain = pb.input_gain;
    out.coercivity = pb.coercivity ? *pb.coercivity : check_coercivity(*pb.metric, pb.radial_options());
    out.invexity_I = check_invexity_condition_I(*pb.predicates, pb.sample_options());
    out.invexity_II =
        check_invexity_condition_II(*pb.predicates, pb.radial_options(), pb.sample_options());
    out.invexity = out.invexity_I.verdict == Verdict::Pass || out.invexity_II.verdict == Verdict::Pass
                       ? Verdict::Pass
                       : Verdict::Warn;
    out.profile = sweep_alpha_opt(*pb.metric, 0.0, pb.scenario.t_end, sweep_dt, pb.ascent_options());
    out.feasibility = validate_feasibility(pb.funnel, out.profile);
    if (!out.feasibility.pass()) {
        out.feasibility_verdict = Verdict::Fail;
    } else if (out.profile.unconverged() > 0) {
        out.feasibility_verdict = Verdict::Warn;
    }
    return out;
}

}  // namespace cfunnel
