#include "nlflow/cli.hpp"

#include "nlflow/bounds.hpp"
#include "nlflow/characteristics.hpp"
#include "nlflow/descriptor.hpp"
#include "nlflow/errors.hpp"
#include "nlflow/parallel.hpp"
#include "nlflow/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace nlflow::cli {

namespace fs = std::filesystem;

const std::vector<std::string>& commands() {
    static const std::vector<std::string> names = {"simulate",   "tangent-check", "gradient-check",
                                                   "optimize",   "convergence",   "bounds-report"};
    return names;
}

namespace {

constexpr std::uint64_t kTangentStream = 0x7a9;
constexpr std::uint64_t kFdStream = 0xfd;

struct Context {
    Problem& p;
    fs::path out;
    std::ostream& log;
    bool quiet;
    Json summary = Json::object();

    void say(const std::string& s) const {
        if (!quiet) log << s << "\n";
    }
};

void write_json(const fs::path& path, const Json& j) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << j.dump(2) << "\n";
}

std::ofstream open_csv(const fs::path& path, const char* header) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << header << "\n";
    return f;
}

std::string g17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string checkpoint_name(const char* prefix, std::size_t step) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%06zu.csv", prefix, step);
    return buf;
}

void write_checkpoints(const fs::path& dir, const char* prefix, const std::vector<std::size_t>& steps,
                       const std::vector<Field>& states) {
    fs::create_directories(dir);
    for (std::size_t c = 0; c < states.size(); ++c) write_field_csv((dir / checkpoint_name(prefix, steps[c])).string(), states[c]);
}

double relative_drift(double m0, double mT, double outflow) {
    const double d = std::abs(mT + outflow - m0);
    return d == 0.0 ? 0.0 : d / std::max(std::abs(m0), 1e-300);
}

void add_warnings(Json& s, const Trajectory& tr) {
    Json w = Json::array();
    if (tr.beyond_existence_horizon) w.push_back("run extends past the estimated existence horizon");
    if (std::abs(tr.boundary_outflow) > 1e-14 * std::max(1.0, std::abs(mass(tr.initial())))) {
        w.push_back("mass left through outflow faces");
    }
    s["warnings"] = w;
}

int simulate(Context& cx) {
    Problem& p = cx.p;
    const Trajectory tr = solve(p.initial, *p.model, p.solver);
    write_checkpoints(cx.out / "states", "rho", tr.checkpoint_steps, tr.states);
    auto series = open_csv(cx.out / "series.csv", "t,mass,linf,tv");
    Json linf = Json::array(), tv = Json::array();
    for (std::size_t c = 0; c < tr.states.size(); ++c) {
        const Field& s = tr.states[c];
        series << g17(tr.times[c]) << "," << g17(mass(s)) << "," << g17(norm_linf(s)) << ","
               << g17(total_variation(s)) << "\n";
        linf.push_back(norm_linf(s));
        tv.push_back(total_variation(s));
    }
    Json& s = cx.summary;
    s["steps"] = tr.steps();
    s["t_end"] = tr.t_end();
    s["mass_initial"] = mass(tr.initial());
    s["mass_final"] = mass(tr.final_state());
    s["boundary_outflow"] = tr.boundary_outflow;
    s["mass_drift"] = relative_drift(mass(tr.initial()), mass(tr.final_state()), tr.boundary_outflow);
    s["times"] = tr.times;
    s["linf_series"] = linf;
    s["tv_series"] = tv;
    s["existence_horizon"] = std::isfinite(tr.existence_horizon) ? Json(tr.existence_horizon) : Json("inf");
    add_warnings(s, tr);
    cx.say("simulate: " + std::to_string(tr.steps()) + " steps to t = " + g17(tr.t_end()));
    return ok;
}

Field default_perturbation(const Field& rho, std::uint64_t seed) {
    const CounterRng rng(seed, kTangentStream);
    Field r(rho.grid());
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = 0.05 * rng.uniform(k, -1.0, 1.0) * rho[k];
    return r;
}

int tangent_check(Context& cx) {
    Problem& p = cx.p;
    const Field r_o = p.perturbation ? *p.perturbation : default_perturbation(p.initial, p.seed);
    SolverConfig cfg = p.solver;
    const Trajectory base = solve(p.initial, *p.model, cfg);
    const TangentSolution tan = tangent_solve(r_o, base, *p.model);
    write_checkpoints(cx.out / "tangent", "r", tan.checkpoint_steps, tan.states);

    const std::vector<double> ladder = {1e-2, 1e-3, 1e-4};
    const GateauxStudy st = gateaux_study(p.initial, r_o, *p.model, cfg, ladder);
    auto csv = open_csv(cx.out / "gateaux.csv", "h,l1_error,observed_order");
    Json rows = Json::array();
    for (const auto& r : st.rows) {
        csv << g17(r.h) << "," << g17(r.l1_error) << "," << g17(r.observed_order) << "\n";
        rows.push_back({{"h", r.h}, {"l1_error", r.l1_error}, {"observed_order", r.observed_order}});
    }
    Json& s = cx.summary;
    s["steps"] = base.steps();
    s["perturbation"] = p.perturbation ? "descriptor" : "seeded";
    s["r_o_l1"] = norm_l1(r_o);
    s["r_final_l1"] = norm_l1(tan.final_state());
    s["tangent_mass_drift"] = relative_drift(mass(r_o), mass(tan.final_state()), 0.0);
    s["tangent_l1_bound"] = tangent_l1_bound(r_o, base, *p.model, base.t_end());
    s["gateaux"] = rows;
    s["fitted_order"] = st.slope;
    add_warnings(s, base);
    cx.say("tangent-check: fitted order " + g17(st.slope));
    return ok;
}

const CostFunctional& need_functional(const Problem& p, const char* command) {
    if (!p.functional) throw ConfigError(std::string("functional: required by ") + command);
    return *p.functional;
}

int gradient_check(Context& cx) {
    Problem& p = cx.p;
    const CostFunctional& J = need_functional(p, "gradient-check");
    AdjointOptions ao;
    ao.seed = p.seed;
    const GradientResult gr = gradient(J, p.initial, *p.model, p.setup, ao);
    write_field_csv((cx.out / "gradient.csv").string(), gr.gradient.g0);

    const CounterRng rng(p.seed, kFdStream);
    Field dir(p.grid);
    for (std::size_t k = 0; k < dir.size(); ++k) dir[k] = rng.normal(k);
    const double adj = inner(gr.gradient.g0, dir);
    auto csv = open_csv(cx.out / "fd_check.csv", "h,fd,adjoint,abs_error");
    Json rows = Json::array();
    std::vector<double> errs;
    for (double h : {1e-3, 1e-4}) {
        const double jp = evaluate(J, p.setup.run(combine(1.0, p.initial, h, dir), *p.model));
        const double jm = evaluate(J, p.setup.run(combine(1.0, p.initial, -h, dir), *p.model));
        const double fd = (jp - jm) / (2.0 * h);
        const double e = std::abs(fd - adj);
        errs.push_back(e);
        csv << g17(h) << "," << g17(fd) << "," << g17(adj) << "," << g17(e) << "\n";
        rows.push_back({{"h", h}, {"fd", fd}, {"adjoint", adj}, {"abs_error", e}});
    }
    Json& s = cx.summary;
    s["J"] = gr.value;
    s["trajectory_id"] = gr.gradient.trajectory_id;
    s["functional_id"] = gr.gradient.functional_id;
    s["dot_test_residual"] = gr.gradient.dot_test_residual;
    s["gradient_l2"] = norm_l2(gr.gradient.g0);
    s["fd_rows"] = rows;
    s["fd_error_ratio"] = errs[1] > 0.0 ? Json(errs[0] / errs[1]) : Json("inf");
    s["schedule"] = p.setup.schedule.empty() ? "adaptive" : "fixed";
    cx.say("gradient-check: dot test " + g17(gr.gradient.dot_test_residual));
    return ok;
}

int optimize_cmd(Context& cx) {
    Problem& p = cx.p;
    const CostFunctional& J = need_functional(p, "optimize");
    const OptimizationReport rep = optimize(J, p.initial, *p.model, p.setup, p.descent);
    auto csv = open_csv(cx.out / "iterates.csv", "iter,J,grad_norm,step");
    for (const auto& r : rep.history) {
        csv << r.iter << "," << g17(r.J) << "," << g17(r.grad_norm) << "," << g17(r.step) << "\n";
    }
    write_field_csv((cx.out / "control.csv").string(), rep.control);
    Json& s = cx.summary;
    s["J_initial"] = rep.J_initial;
    s["J_final"] = rep.J_final;
    s["iterations"] = rep.iterations;
    s["stop_reason"] = rep.stop_reason;
    s["optimality_residual"] = rep.optimality_residual;
    s["dot_test_residual"] = rep.dot_test_residual;
    s["aborted"] = rep.aborted;
    if (p.target) s["control_l1_error"] = norm_l1(rep.control - *p.target);
    cx.say("optimize: J " + g17(rep.J_initial) + " -> " + g17(rep.J_final) + " in " +
           std::to_string(rep.iterations) + " iterations (" + rep.stop_reason + ")");
    return rep.aborted ? numerical_error : ok;
}

Grid refined(const Grid& g, int factor) {
    if (g.dim == 1) return Grid::line(g.origin[0], g.extents[0], g.cells[0] * factor);
    return Grid::plane(g.origin, g.extents, {g.cells[0] * factor, g.cells[1] * factor});
}

// Frozen velocity V(rho_o) on the descriptor grid, extended by interpolation.
int convergence(Context& cx) {
    Problem& p = cx.p;
    if (p.solver.boundary != Boundary::outflow) throw ConfigError("solver.boundary: convergence needs outflow");
    const VectorField w0 = p.model->velocity(p.initial);
    const Grid& g0 = p.grid;
    const auto wfun = [&](const Point& x) {
        Point v{interpolate(g0, w0.x, x), 0.0};
        if (g0.dim == 2) v[1] = interpolate(g0, w0.y, x);
        return v;
    };
    const auto r_fun = datum_function(p.descriptor.at("initial"), g0, p.base_dir);

    const std::vector<int> factors = g0.dim == 1 ? std::vector<int>{1, 2, 4, 8} : std::vector<int>{1, 2, 4};
    auto csv = open_csv(cx.out / "convergence.csv", "cells,h,l1_error,observed_order");
    Json rows = Json::array();
    std::vector<double> hs, es;
    for (int f : factors) {
        const Grid g = refined(g0, f);
        VectorField w(g);
        for (std::size_t k = 0; k < g.size(); ++k) {
            const Point v = wfun(g.center_of(k));
            w.x[k] = v[0];
            if (g.dim == 2) w.y[k] = v[1];
        }
        const FrozenVelocityModel frozen(w, p.solver.boundary);
        SolverConfig cfg = p.solver;
        cfg.record_every = 1 << 30;
        const Trajectory tr = solve(Field::from_function(g, r_fun), frozen, cfg);
        const double h_ode = std::min(0.25 * g.min_spacing() / std::max(w.max_abs_component(), 1e-12), cfg.t_end / 64.0);
        FlowMap fl(g0.dim, [&](double, const Point& x) { return wfun(x); }, {}, h_ode);
        fl.set_domain(g0.origin, g0.upper());
        const Field exact = representation_solution(r_fun, g, {}, fl, tr.t_end());
        const double e = norm_l1(tr.final_state() - exact);
        double order = 0.0;
        if (!es.empty() && es.back() > 0.0 && e > 0.0) order = std::log(es.back() / e) / std::log(hs.back() / g.min_spacing());
        hs.push_back(g.min_spacing());
        es.push_back(e);
        csv << g.cells[0] * (g.dim == 2 ? g.cells[1] : 1) << "," << g17(g.min_spacing()) << "," << g17(e) << ","
            << g17(order) << "\n";
        rows.push_back({{"cells", g.size()}, {"h", g.min_spacing()}, {"l1_error", e}, {"observed_order", order}});
        cx.say("convergence: " + std::to_string(g.size()) + " cells, L1 error " + g17(e));
    }
    cx.summary["rows"] = rows;
    cx.summary["fitted_order"] = fitted_order(hs, es);
    cx.summary["velocity"] = "frozen at V(rho_o) on the descriptor grid";
    return ok;
}

int bounds_report(Context& cx) {
    Problem& p = cx.p;
    const Trajectory base = solve(p.initial, *p.model, p.solver);
    AuditOptions ao;
    ao.seed = p.seed;
    ao.cfl = p.solver.cfl;
    ao.provenance = p.model->name() + " " + trajectory_id(base);
    const BoundsReport rep = audit_run(base, *p.model, ao);
    {
        std::ofstream f(cx.out / "bounds.json");
        f << rep.to_json() << "\n";
    }
    {
        std::ofstream f(cx.out / "bounds.txt");
        f << rep.table();
    }
    if (!cx.quiet) cx.log << rep.table();
    cx.summary["all_satisfied"] = rep.all_satisfied();
    Json failed = Json::array();
    for (const auto& e : rep.entries) {
        if (!e.satisfied) failed.push_back(e.name);
    }
    cx.summary["violated"] = failed;
    cx.summary["entries"] = rep.entries.size();
    cx.summary["warnings"] = rep.warnings;
    return rep.all_satisfied() ? ok : audit_failure;
}

int dispatch(const std::string& command, Context& cx) {
    if (command == "simulate") return simulate(cx);
    if (command == "tangent-check") return tangent_check(cx);
    if (command == "gradient-check") return gradient_check(cx);
    if (command == "optimize") return optimize_cmd(cx);
    if (command == "convergence") return convergence(cx);
    if (command == "bounds-report") return bounds_report(cx);
    throw ConfigError("unknown command " + command);
}

} // namespace

int run(const Options& opt, std::ostream& log, std::ostream& err) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (std::find(commands().begin(), commands().end(), opt.command) == commands().end()) {
            throw ConfigError("unknown command " + opt.command);
        }
        const int threads = configure_threads();
        Json doc = load_descriptor(opt.config);
        if (opt.seed) doc["seed"] = *opt.seed;
        const fs::path cfg_dir = fs::absolute(opt.config).parent_path();
        Problem p = build_problem(doc, cfg_dir.string());
        const fs::path out = opt.out.empty() ? fs::path(p.output_dir) : fs::path(opt.out);
        fs::create_directories(out);
        write_json(out / "descriptor.json", doc);

        Context cx{p, out, log, opt.quiet};
        cx.summary["command"] = opt.command;
        cx.summary["model"] = p.model->name();
        cx.summary["seed"] = p.seed;
        int code = ok;
        try {
            code = dispatch(opt.command, cx);
        } catch (const NumericalError& e) {
            cx.summary["error"] = std::string("numerical: ") + e.what();
            write_json(out / "summary.json", cx.summary);
            throw;
        }
        cx.summary["exit_code"] = code;
        write_json(out / "summary.json", cx.summary);
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        write_json(out / "timing.json", Json{{"wall_time_ms", ms}, {"threads", threads}});
        if (code == numerical_error) err << opt.command << ": aborted on a numerical failure\n";
        if (code == audit_failure) err << opt.command << ": audit failed, see " << (out / "bounds.json").string() << "\n";
        return code;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return numerical_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return internal_error;
    }
}

} // namespace nlflow::cli
