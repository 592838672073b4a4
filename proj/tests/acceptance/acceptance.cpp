// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "nlflow/bounds.hpp"
#include "nlflow/characteristics.hpp"
#include "nlflow/cli.hpp"
#include "nlflow/descriptor.hpp"
#include "nlflow/forward.hpp"
#include "nlflow/models.hpp"
#include "nlflow/parallel.hpp"
#include "nlflow/rng.hpp"
#include "nlflow/tangent.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace nlflow;
namespace fs = std::filesystem;

namespace {

const fs::path source_dir = NLFLOW_SOURCE_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Field bump(const Grid& g, Point c, double r, double amp = 1.0) {
    return Field::from_function(g, [&](const Point& x) {
        double q = (x[0] - c[0]) * (x[0] - c[0]);
        if (g.dim == 2) q += (x[1] - c[1]) * (x[1] - c[1]);
        q /= r * r;
        return q < 1.0 ? amp * std::pow(1.0 - q, 3) : 0.0;
    });
}

Field uniform_field(const Grid& g, std::uint64_t stream, double lo, double hi) {
    const CounterRng rng(2024, stream);
    Field f(g);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = rng.uniform(k, lo, hi);
    return f;
}

double rel_drift(double m0, double m1) { return std::abs(m1 - m0) / std::abs(m0); }

// Runs one CLI command on a shipped fixture; returns the summary.
Json cli_run(const std::string& cmd, const std::string& fixture, int& code) {
    const fs::path out = fs::temp_directory_path() / "nlflow_acceptance" / (fixture + "_" + cmd);
    fs::remove_all(out);
    std::ostringstream log, err;
    code = cli::run({cmd, (source_dir / "configs" / (fixture + ".json")).string(), out.string(), std::nullopt, true},
                    log, err);
    std::ifstream f(out / "summary.json");
    if (!f) return Json::object();
    return Json::parse(f);
}

Outcome conservation() {
    std::string detail;
    bool pass = true;

    {
        const auto t0 = std::chrono::steady_clock::now();
        const Grid g = Grid::line(0.0, 1.0, 2000);
        const SupplyChainModel m({1.0, 0.0, 0.25});
        SolverConfig cfg;
        cfg.boundary = Boundary::periodic;
        cfg.record_every = 500;
        const std::vector<double> dts(2000, 0.45 * g.spacing[0]);
        cfg.t_end = 2000 * dts[0];
        const Field rho = uniform_field(g, 1, 0.0, 1.0);
        const Trajectory tr = solve_on_schedule(rho, m, cfg, dts);
        const Field r_o = uniform_field(g, 2, 0.0, 1.0);
        const TangentSolution tan = tangent_solve(r_o, tr, m);
        const double fwd = rel_drift(mass(rho), mass(tr.final_state()));
        const double lin = rel_drift(mass(r_o), mass(tan.final_state()));
        const double secs = seconds_since(t0);
        pass = pass && tr.steps() == 2000 && fwd <= 1e-11 && lin <= 1e-11;
        detail += fmt("1-D drift %.2e / tangent %.2e (%.2f s); ", fwd, lin, secs);
    }
    {
        const auto t0 = std::chrono::steady_clock::now();
        const Grid g = Grid::plane({0.0, 0.0}, {1.0, 1.0}, {256, 256});
        PedestrianParams p;
        p.law.cap = 4.0;
        p.kernel_radius = 16.0 / 256.0;
        p.direction = uniform_direction(g, 0.6);
        const PedestrianModel m(g, std::move(p));
        SolverConfig cfg;
        cfg.boundary = Boundary::periodic;
        cfg.record_every = 100;
        const std::vector<double> dts(500, 0.45 * g.spacing[0]);
        cfg.t_end = 500 * dts[0];
        const Field rho = combine(1.0, bump(g, {0.4, 0.5}, 0.25, 2.0), 0.5, uniform_field(g, 3, 0.0, 1.0));
        const Trajectory tr = solve_on_schedule(rho, m, cfg, dts);
        const Field r_o = uniform_field(g, 4, 0.0, 1.0);
        const TangentSolution tan = tangent_solve(r_o, tr, m);
        const double fwd = rel_drift(mass(rho), mass(tr.final_state()));
        const double lin = rel_drift(mass(r_o), mass(tan.final_state()));
        const double secs = seconds_since(t0);
        pass = pass && tr.steps() == 500 && fwd <= 1e-11 && lin <= 1e-11 && secs < 60.0;
        detail += fmt("2-D drift %.2e / tangent %.2e (%.1f s, %d threads)", fwd, lin, secs, configure_threads());
    }
    return {pass, detail};
}

Outcome invariance() {
    const Grid g = Grid::line(-1.0, 2.5, 500);
    const SupplyChainModel m({1.0, 0.0, 1.0});
    SolverConfig cfg;
    cfg.t_end = 1.5;
    const std::vector<Field> data = {
        bump(g, {0.0, 0.0}, 0.4, 0.5),
        Field::from_function(g, [](const Point& x) { return x[0] >= 0.0 && x[0] <= 0.5 ? 1.0 : 0.0; }),
        uniform_field(g, 5, 0.0, 1.0),
    };
    double worst = -1.0;
    for (const Field& rho : data) {
        const double cap = norm_linf(rho) + 1e-12;
        for (const Field& s : solve(rho, m, cfg).states) worst = std::max(worst, norm_linf(s) - cap);
    }
    return {worst <= 0.0, fmt("max(|rho(t)|_inf - |rho_o|_inf - 1e-12) = %.2e over 3 data", worst)};
}

Outcome oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    const double tau = 2.0 * std::numbers::pi;
    const auto wv = [&](double x) { return 1.0 + 0.5 * std::sin(tau * x); };
    const auto r_fun = [](const Point& x) {
        const double q = (x[0] - 0.75) * (x[0] - 0.75) / 0.16;
        return q < 1.0 ? std::pow(1.0 - q, 3) : 0.0;
    };
    std::vector<double> hs, es;
    std::string detail;
    bool monotone = true;
    for (int n : {250, 500, 1000, 2000}) {
        const Grid g = Grid::line(0.0, 3.0, n);
        VectorField w(g);
        for (std::size_t k = 0; k < g.size(); ++k) w.x[k] = wv(g.center_of(k)[0]);
        const FrozenVelocityModel frozen(w);
        SolverConfig cfg;
        cfg.t_end = 1.0;
        cfg.record_every = 1 << 30;
        const Trajectory tr = solve(Field::from_function(g, r_fun), frozen, cfg);
        FlowMap fl(
            1, [&](double, const Point& x) { return Point{wv(x[0]), 0.0}; },
            [&](double, const Point& x) { return 0.5 * tau * std::cos(tau * x[0]); }, 0.25 * g.spacing[0] / 1.5);
        fl.set_domain(g.origin, g.upper());
        const double e = norm_l1(tr.final_state() - representation_solution(r_fun, g, {}, fl, tr.t_end()));
        if (!es.empty() && e >= es.back()) monotone = false;
        hs.push_back(g.spacing[0]);
        es.push_back(e);
        detail += fmt("%d:%.2e ", n, e);
    }
    const double order = fitted_order(hs, es);
    const double secs = seconds_since(t0);
    return {monotone && order >= 0.8 && secs < 30.0, detail + fmt("fitted order %.3f (%.1f s)", order, secs)};
}

Outcome gateaux() {
    const auto t0 = std::chrono::steady_clock::now();
    int code = 0;
    const Json s = cli_run("tangent-check", "supply_chain", code);
    if (code != 0) return {false, fmt("tangent-check exited %d", code)};
    const double slope = s["fitted_order"].get<double>();
    std::string detail;
    for (const auto& r : s["gateaux"]) detail += fmt("h=%.0e:%.2e ", r["h"].get<double>(), r["l1_error"].get<double>());
    const double secs = seconds_since(t0);
    return {std::abs(slope - 1.0) <= 0.2 && secs < 20.0, detail + fmt("slope %.4f (%.1f s)", slope, secs)};
}

Outcome adjoint() {
    bool pass = true;
    std::string detail;
    for (const char* fixture : {"supply_chain", "pedestrian"}) {
        int code = 0;
        const Json s = cli_run("gradient-check", fixture, code);
        if (code != 0) return {false, fmt("gradient-check on %s exited %d", fixture, code)};
        const double dot = s["dot_test_residual"].get<double>();
        const double ratio = s["fd_error_ratio"].is_number() ? s["fd_error_ratio"].get<double>() : INFINITY;
        pass = pass && dot <= 1e-12 && ratio >= 50.0 && ratio <= 200.0;
        detail += fmt("%s: dot %.1e, FD ratio %.1f; ", fixture, dot, ratio);
    }
    return {pass, detail};
}

Outcome optimality() {
    const auto t0 = std::chrono::steady_clock::now();
    int code = 0;
    const Json s = cli_run("optimize", "supply_chain", code);
    if (code != 0) return {false, fmt("optimize exited %d", code)};
    const double j0 = s["J_initial"].get<double>();
    const double j1 = s["J_final"].get<double>();
    const int iters = s["iterations"].get<int>();
    const double res = s["optimality_residual"].get<double>();
    const double secs = seconds_since(t0);
    return {j1 <= 1e-6 * j0 && iters <= 200 && res <= 1e-5 && secs < 300.0,
            fmt("J %.3e -> %.3e (ratio %.1e) in %d iterations, residual %.2e (%.1f s)", j0, j1, j1 / j0, iters, res,
                secs)};
}

Outcome audit() {
    bool pass = true;
    std::string detail;
    for (const char* fixture : {"supply_chain", "pedestrian"}) {
        int code = 0;
        cli_run("bounds-report", fixture, code);
        const fs::path path = fs::temp_directory_path() / "nlflow_acceptance" / (std::string(fixture) + "_bounds-report") /
                              "bounds.json";
        std::ifstream f(path);
        if (!f) return {false, fmt("no bounds.json for %s (exit %d)", fixture, code)};
        const Json b = Json::parse(f);
        std::string failed;
        for (const char* name : {"linf_growth", "total_variation", "lipschitz", "tangent_l1", "kappa0_over_kappa"}) {
            bool ok = false;
            for (const auto& e : b["entries"])
                if (e["name"] == name) ok = e["satisfied"].get<bool>();
            if (!ok) failed += std::string(" ") + name;
        }
        pass = pass && failed.empty();
        detail += std::string(fixture) + (failed.empty() ? ": 5/5 satisfied; " : ": violated" + failed + "; ");
    }
    return {pass, detail};
}

Outcome constants() {
    std::vector<double> w(11);
    w[0] = std::numbers::pi / 2.0;
    w[1] = 1.0;
    for (int n = 2; n <= 10; ++n) w[n] = w[n - 2] * (n - 1) / n;
    bool exact = true;
    for (int n = 0; n <= 10; ++n) exact = exact && wallis(n) == w[n];

    double worst = 0.0;
    const std::vector<std::function<double(double)>> Cs = {
        [](double) { return 1.0; }, [](double b) { return 2.0 + 3.0 * b; }, [](double b) { return b * b; }};
    for (const auto& C : Cs) {
        for (auto [a, b] : {std::pair{1.0, 2.0}, {0.5, 4.0}, {1e-3, 1.0}}) {
            const double expect = std::log(b / a) / C(b);
            worst = std::max(worst, std::abs(existence_time(a, b, C) - expect) / expect);
        }
    }
    const Grid g = Grid::plane({0.0, 0.0}, {4.0, 2.0}, {80, 40});
    PedestrianParams p;
    p.kernel_radius = 0.2;
    const PedestrianModel ped(g, p);
    const double expect = std::log(3.0 / 1.5) / ped.lipschitz_scale(3.0);
    worst = std::max(worst, std::abs(existence_time(1.5, 3.0, ped).T - expect) / expect);
    return {exact && worst <= 1e-14,
            fmt("wallis recurrence %s for N = 0..10, existence_time max rel error %.1e", exact ? "exact" : "MISMATCH",
                worst)};
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {"conservation", conservation}, {"invariance", invariance},   {"oracle-convergence", oracle},
        {"gateaux-slope", gateaux},     {"adjoint-exactness", adjoint}, {"optimality", optimality},
        {"theory-audit", audit},        {"constants", constants},
    };
    int failures = 0;
    int index = 1;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", index++, c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%d criteria passed\n", 8 - failures, 8);
    return failures == 0 ? 0 : 1;
}
