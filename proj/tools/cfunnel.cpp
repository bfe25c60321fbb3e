// cfunnel: command-line front end.
//
//   cfunnel simulate <file> --out <dir> [--dt DT] [--t-end T]
//   cfunnel check <file> [--json]
//   cfunnel boundary <file> --times t1,t2,... [--grid N] [--box xmin,xmax,ymin,ymax] [--out dir]
//   cfunnel alphaopt <file> --range t0:t1:dt [--out file]
//
// Exit codes: 0 success, 1 validation failure / FAIL verdict, 2 integration
// abort, 3 I/O error. SPDLOG_LEVEL sets the log level.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cfunnel/boundary.hpp"
#include "cfunnel/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cfunnel;

namespace {

enum Exit { kOk = 0, kValidation = 1, kAbort = 2, kIo = 3 };

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p);
    if (!os) throw IoError("cannot write '" + p.string() + "'");
    return os;
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

// JSON has no infinity; report it as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
    return a;
}

Problem load_problem(const std::string& file, bool coercivity = true) {
    Problem pb = load(file, BuildOptions{coercivity});
    for (const auto& w : pb.warnings) spdlog::warn("{}", w);
    spdlog::info("alpha(0, x0) = {:.6g}; funnel rho_0 = {:.6g}, rho_inf = {:.6g}, T = {:.6g}, "
                 "rho_max = {:.6g}",
                 pb.alpha0, pb.funnel.rho_0, pb.funnel.rho_inf, pb.funnel.T, pb.funnel.rho_max);
    return pb;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& file, const std::string& out, std::optional<double> dt,
                 std::optional<double> t_end) {
    Scenario sc = read_scenario(file);
    if (dt) sc.dt = *dt;
    if (t_end) sc.t_end = *t_end;
    Problem pb = build_problem(sc);
    for (const auto& w : pb.warnings) spdlog::warn("{}", w);
    std::cout << fmt::format("alpha(0, x0) = {:.6g}\n", pb.alpha0);

    const Controller ctrl = pb.controller();
    const SimResult res = integrate(pb.plant, ctrl, pb.sim_options());

    make_dir(out);
    const fs::path dir(out);
    {
        auto os = open_out(dir / "trajectory.csv");
        write_trajectory_csv(os, res.samples);
    }
    const SimEvents& ev = res.events;
    json events = {
        {"status", to_string(res.status)},
        {"message", res.message},
        {"first_alpha_bar_positive", ev.first_alpha_bar_positive >= 0 ? num(ev.first_alpha_bar_positive) : json(nullptr)},
        {"last_alpha_bar_nonpositive", ev.last_alpha_bar_nonpositive >= 0 ? num(ev.last_alpha_bar_nonpositive) : json(nullptr)},
        {"breaches", ev.breaches},
        {"clamps", ev.clamps},
        {"steps", ev.steps},
        {"runtime_seconds", res.runtime_seconds},
    };
    json summary = {
        {"alpha0", pb.alpha0},
        {"funnel", {{"rho_0", pb.funnel.rho_0}, {"rho_inf", pb.funnel.rho_inf}, {"T", pb.funnel.T},
                    {"beta", pb.funnel.beta}, {"rho_max", pb.funnel.rho_max}}},
        {"min_lower_margin", num(ev.min_lower_margin)},
        {"min_upper_margin", num(ev.min_upper_margin)},
        {"min_alpha_bar_after_T", num(ev.min_alpha_bar_after_T)},
        {"min_alpha_after_T", num(ev.min_alpha_after_T)},
    };
    open_out(dir / "events.json") << events.dump(2) << '\n';
    open_out(dir / "summary.json") << summary.dump(2) << '\n';

    std::cout << fmt::format("{}: {} steps, {} breaches, {} clamps, {:.2f} s\n", to_string(res.status),
                             ev.steps, ev.breaches, ev.clamps, res.runtime_seconds);
    if (!res.ok()) {
        spdlog::error("{}", res.message);
        return kAbort;
    }
    return kOk;
}

// ------------------------------------------------------------------- check

int cmd_check(const std::string& file, bool as_json) {
    const Problem pb = load_problem(file);
    const CheckSummary s = run_checks(pb);

    json curv = json::array();
    for (const auto& c : s.invexity_I.constraints) {
        curv.push_back({{"constraint", c.constraint}, {"kind", to_string(c.kind)},
                        {"required", c.required}, {"min_eigenvalue", num(c.min_eigenvalue)},
                        {"max_eigenvalue", num(c.max_eigenvalue)}, {"verdict", to_string(c.verdict)}});
    }
    json report = {
        {"alpha0", pb.alpha0},
        {"input_gain", {{"verdict", to_string(s.input_gain.verdict)},
                        {"min_eigenvalue", num(s.input_gain.min_eigenvalue)}}},
        {"coercivity", {{"verdict", to_string(s.coercivity.verdict)},
                        {"failing_directions", s.coercivity.failing_directions},
                        {"warning_directions", s.coercivity.warning_directions},
                        {"worst_direction", vec(s.coercivity.worst_direction)},
                        {"message", s.coercivity.message}}},
        {"invexity_condition_I", {{"verdict", to_string(s.invexity_I.verdict)}, {"constraints", curv}}},
        {"invexity_condition_II", {{"verdict", to_string(s.invexity_II.verdict)},
                                   {"square_funnels_only", s.invexity_II.square_funnels_only},
                                   {"min_singular_value", num(s.invexity_II.min_singular_value)},
                                   {"min_abs_determinant", num(s.invexity_II.min_abs_determinant)},
                                   {"message", s.invexity_II.message}}},
        {"invexity", to_string(s.invexity)},
        {"feasibility", {{"verdict", to_string(s.feasibility_verdict)},
                         {"alpha_opt_inf", num(s.profile.infimum())},
                         {"alpha_opt_sup", num(s.profile.supremum())},
                         {"unconverged", s.profile.unconverged()},
                         {"delta_rho", num(s.feasibility.delta_rho)},
                         {"lower_margin", num(s.feasibility.lower_margin)},
                         {"upper_margin", num(s.feasibility.upper_margin)},
                         {"condition_i", s.feasibility.condition_i},
                         {"condition_ii", s.feasibility.condition_ii},
                         {"upper_ok", s.feasibility.upper_ok}}},
        {"ok", s.ok()},
    };
    if (as_json) {
        std::cout << report.dump(2) << '\n';
    } else {
        std::cout << fmt::format("alpha(0, x0)          {:.6g}\n", pb.alpha0)
                  << fmt::format("input gain            {}  (min eig of g_s {:.4g})\n",
                                 to_string(s.input_gain.verdict), s.input_gain.min_eigenvalue)
                  << fmt::format("coercivity            {}  {}\n", to_string(s.coercivity.verdict),
                                 s.coercivity.message)
                  << fmt::format("invexity condition I  {}\n", to_string(s.invexity_I.verdict));
        for (const auto& c : s.invexity_I.constraints) {
            std::cout << fmt::format("  [{}] {:<6} needs {:<8} Hessian eigs in [{:.4g}, {:.4g}]  {}\n",
                                     c.constraint, to_string(c.kind), c.required, c.min_eigenvalue,
                                     c.max_eigenvalue, to_string(c.verdict));
        }
        std::cout << fmt::format("invexity condition II {}  {}\n", to_string(s.invexity_II.verdict),
                                 s.invexity_II.message)
                  << fmt::format("invexity (I or II)    {}\n", to_string(s.invexity))
                  << fmt::format("feasibility           {}  alpha_opt in [{:.4f}, {:.4f}], lower margin "
                                 "{:.4g}, upper margin {:.4g}, min width {:.4g}\n",
                                 to_string(s.feasibility_verdict), s.profile.infimum(),
                                 s.profile.supremum(), s.feasibility.lower_margin,
                                 s.feasibility.upper_margin, s.feasibility.delta_rho);
    }
    return s.ok() ? kOk : kValidation;
}

// ---------------------------------------------------------------- boundary

std::vector<double> split_numbers(const std::string& text, char sep) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw CLI::ValidationError("'" + item + "' is not a number");
        out.push_back(v);
    }
    return out;
}

int cmd_boundary(const std::string& file, const std::string& times, std::size_t grid,
                 const std::string& box, const std::string& out, bool alpha_only) {
    const Problem pb = load_problem(file, false);
    BoundaryOptions opt;
    opt.grid = grid;
    opt.with_alpha_bar = !alpha_only;
    if (!box.empty()) {
        const auto b = split_numbers(box, ',');
        if (b.size() != 4) throw CLI::ValidationError("--box needs xmin,xmax,ymin,ymax");
        opt.box = PlaneBox{b[0], b[1], b[2], b[3]};
    }
    make_dir(out);
    for (double t : split_numbers(times, ',')) {
        BoundarySnapshot snap;
        try {
            snap = extract_boundary(*pb.metric, t, opt);
        } catch (const BoundaryError& e) {
            spdlog::error("{}", e.what());
            return kValidation;
        }
        const fs::path path = fs::path(out) / fmt::format("boundary_t{}.csv", t);
        auto os = open_out(path);
        write_boundary_csv(os, snap);
        if (snap.alpha.empty()) spdlog::warn("t = {}: alpha = 0 contour is empty in the box", t);
        std::cout << fmt::format("t = {}: {} alpha chain(s) / {} points, {} alpha_bar chain(s) -> {}\n",
                                 t, snap.alpha.chains.size(), snap.alpha.point_count(),
                                 snap.alpha_bar.chains.size(), path.string());
    }
    return kOk;
}

// ---------------------------------------------------------------- alphaopt

int cmd_alphaopt(const std::string& file, const std::string& range, const std::string& out) {
    const auto r = split_numbers(range, ':');
    if (r.size() != 3 || !(r[2] > 0.0) || r[1] < r[0]) {
        throw CLI::ValidationError("--range needs t0:t1:dt with t0 <= t1 and dt > 0");
    }
    const Problem pb = load_problem(file, false);
    const OptProfile prof = sweep_alpha_opt(*pb.metric, r[0], r[1], r[2], pb.ascent_options());
    if (out.empty()) {
        prof.write_csv(std::cout);
    } else {
        auto os = open_out(out);
        prof.write_csv(os);
    }
    if (prof.unconverged() > 0) spdlog::warn("{} grid time(s) did not converge", prof.unconverged());
    spdlog::info("alpha_opt in [{:.6g}, {:.6g}]", prof.infimum(), prof.supremum());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_mt("cfunnel");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::cfg::load_env_levels();

    CLI::App app{"Constrained funnel control: simulation and analysis of scenario files"};
    app.require_subcommand(1);

    std::string file, out, bnd_out, opt_out, times, box, range;
    std::optional<double> dt, t_end;
    bool as_json = false, alpha_only = false;
    std::size_t grid = 400;

    auto* sim = app.add_subcommand("simulate", "Closed-loop simulation");
    sim->add_option("file", file, "Scenario file")->required();
    sim->add_option("--out", out, "Output directory")->required();
    sim->add_option("--dt", dt, "Override the step size");
    sim->add_option("--t-end", t_end, "Override the horizon");

    auto* chk = app.add_subcommand("check", "Assumption and feasibility checks");
    chk->add_option("file", file, "Scenario file")->required();
    chk->add_flag("--json", as_json, "Print the report as JSON");

    auto* bnd = app.add_subcommand("boundary", "Zero level sets of alpha and alpha_bar (n = 2)");
    bnd->add_option("file", file, "Scenario file")->required();
    bnd->add_option("--times", times, "Comma-separated times")->required();
    bnd->add_option("--grid", grid, "Cells per axis")->check(CLI::Range(2, 10000));
    bnd->add_option("--box", box, "xmin,xmax,ymin,ymax");
    bnd->add_option("--out", bnd_out, "Output directory")->default_val(".");
    bnd->add_flag("--alpha-only", alpha_only, "Skip the alpha_bar contour");

    auto* opt = app.add_subcommand("alphaopt", "alpha_opt profile");
    opt->add_option("file", file, "Scenario file")->required();
    opt->add_option("--range", range, "t0:t1:dt")->required();
    opt->add_option("--out", opt_out, "CSV file (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kValidation;
    }

    try {
        if (*sim) return cmd_simulate(file, out, dt, t_end);
        if (*chk) return cmd_check(file, as_json);
        if (*bnd) return cmd_boundary(file, times, grid, box, bnd_out, alpha_only);
        if (*opt) return cmd_alphaopt(file, range, opt_out);
    } catch (const ScenarioError& e) {
        spdlog::error("{}", e.what());
        return e.kind() == ScenarioError::Kind::Io ? kIo : kValidation;
    } catch (const IoError& e) {
        spdlog::error("{}", e.what());
        return kIo;
    } catch (const CLI::ValidationError& e) {
        spdlog::error("{}", e.what());
        return kValidation;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kValidation;
    }
    return kOk;
}
