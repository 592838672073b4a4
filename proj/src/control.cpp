#include "nlflow/control.hpp"

#include "nlflow/errors.hpp"
#include "nlflow/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nlflow {

std::string to_string(FunctionalKind k) {
    switch (k) {
    case FunctionalKind::J1: return "J1";
    case FunctionalKind::J2: return "J2";
    case FunctionalKind::JPED: return "JPED";
    }
    return "J1";
}

FunctionalKind functional_from_string(const std::string& name) {
    if (name == "J1") return FunctionalKind::J1;
    if (name == "J2") return FunctionalKind::J2;
    if (name == "JPED") return FunctionalKind::JPED;
    throw ConfigError("unknown functional '" + name + "'");
}

std::string CostFunctional::id() const {
    std::ostringstream s;
    s << to_string(kind) << "(T=" << horizon;
    if (kind == FunctionalKind::JPED) s << ", threshold=" << threshold;
    else s << ", window=[" << window_lo << "," << window_hi << "]";
    s << ")";
    return s.str();
}

CostFunctional make_tracking(FunctionalKind kind, Field demand, double horizon, double window_lo,
                             double window_hi) {
    require(kind != FunctionalKind::JPED, "tracking functionals are J1 or J2");
    require(demand.grid().dim == 1, "demand tracking is defined on 1-D grids");
    require(window_hi > window_lo, "functional window must be nonempty");
    require(horizon > 0.0, "functional horizon must be positive");
    CostFunctional J;
    J.kind = kind;
    J.demand = std::move(demand);
    J.horizon = horizon;
    J.window_lo = window_lo;
    J.window_hi = window_hi;
    return J;
}

CostFunctional make_threshold(double threshold, Field psi, double horizon) {
    require(threshold >= 0.0, "threshold must be nonnegative");
    require(horizon > 0.0, "functional horizon must be positive");
    for (double v : psi.values()) require(v >= 0.0 && v <= 1.0, "psi must take values in [0, 1]");
    CostFunctional J;
    J.kind = FunctionalKind::JPED;
    J.threshold = threshold;
    J.psi = std::move(psi);
    J.horizon = horizon;
    return J;
}

double threshold_cost(double rho, double threshold) {
    const double e = std::max(0.0, rho - threshold);
    return e * e;
}

double threshold_cost_derivative(double rho, double threshold) { return 2.0 * std::max(0.0, rho - threshold); }

namespace {

double smoothstep(double u) { // C-infinity, 0 at u <= 0, 1 at u >= 1
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / u);
    const double b = std::exp(-1.0 / (1.0 - u));
    return a / (a + b);
}

double plateau(double x, double lo, double hi, double margin) {
    if (x < lo) return smoothstep(1.0 - (lo - x) / margin);
    if (x > hi) return smoothstep(1.0 - (x - hi) / margin);
    return 1.0;
}

std::vector<double> overlap_weights(const Grid& g, double lo, double hi) {
    std::vector<double> w(g.size(), 0.0);
    for (int i = 0; i < g.cells[0]; ++i) {
        const double a = g.origin[0] + i * g.spacing[0];
        const double overlap = std::min(a + g.spacing[0], hi) - std::max(a, lo);
        if (overlap > 0.0) w[i] = std::min(1.0, overlap / g.spacing[0]);
    }
    return w;
}

void check_horizon(const CostFunctional& J, const Trajectory& base) {
    require(!base.states.empty(), "trajectory is empty");
    if (std::abs(base.t_end() - J.horizon) > 1e-9 * std::max(1.0, J.horizon)) {
        std::ostringstream msg;
        msg << "trajectory ends at t = " << base.t_end() << " but the functional horizon is " << J.horizon;
        throw ConfigError(msg.str());
    }
    if (J.kind == FunctionalKind::JPED) {
        require(base.record_every == 1, "JPED needs a checkpoint at every step (record_every = 1)");
        check_same_grid(base.grid, J.psi.grid(), "JPED weight");
    } else {
        check_same_grid(base.grid, J.demand.grid(), "demand");
    }
}

std::vector<double> trapezoid_weights(const std::vector<double>& t) {
    std::vector<double> w(t.size(), 0.0);
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        const double h = 0.5 * (t[k + 1] - t[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    return w;
}

// Midpoint prefix B_i = sum_{k<i} w_k e_k dx + w_i e_i dx / 2.
std::vector<double> prefix(const std::vector<double>& we, double dx) {
    std::vector<double> B(we.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < we.size(); ++i) {
        B[i] = acc + 0.5 * we[i] * dx;
        acc += we[i] * dx;
    }
    return B;
}

} // namespace

Field smooth_indicator(const Grid& grid, const Point& core_lo, const Point& core_hi, double margin) {
    require(margin > 0.0, "indicator margin must be positive");
    return Field::from_function(grid, [&](const Point& x) {
        double v = plateau(x[0], core_lo[0], core_hi[0], margin);
        if (grid.dim == 2) v *= plateau(x[1], core_lo[1], core_hi[1], margin);
        return v;
    });
}

double evaluate(const CostFunctional& J, const Trajectory& base) {
    check_horizon(J, base);
    const Grid& g = base.grid;
    if (J.kind == FunctionalKind::JPED) {
        const auto w = trapezoid_weights(base.times);
        double total = 0.0;
        for (std::size_t n = 0; n < base.states.size(); ++n) {
            const double tw = J.psi_time ? J.psi_time(base.times[n]) : 1.0;
            double s = 0.0;
            const Field& rho = base.states[n];
            for (std::size_t k = 0; k < rho.size(); ++k) s += threshold_cost(rho[k], J.threshold) * J.psi[k];
            total += w[n] * tw * s * g.cell_volume();
        }
        return total;
    }
    const Field& rho = base.final_state();
    const auto w = overlap_weights(g, J.window_lo, J.window_hi);
    const double dx = g.spacing[0];
    if (J.kind == FunctionalKind::J1) {
        double s = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) {
            const double e = J.demand[i] - rho[i];
            s += w[i] * e * e;
        }
        return 0.5 * s * dx;
    }
    std::vector<double> we(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) we[i] = w[i] * (J.demand[i] - rho[i]);
    const auto B = prefix(we, dx);
    double s = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) s += w[i] * B[i] * B[i];
    return 0.5 * s * dx;
}

SensitivitySeries terminal_sensitivity(const CostFunctional& J, const Trajectory& base) {
    check_horizon(J, base);
    const Grid& g = base.grid;
    SensitivitySeries out;
    if (J.kind == FunctionalKind::JPED) {
        const auto w = trapezoid_weights(base.times);
        for (std::size_t n = 0; n < base.states.size(); ++n) {
            const double tw = J.psi_time ? J.psi_time(base.times[n]) : 1.0;
            const Field& rho = base.states[n];
            Field gn(g);
            bool any = false;
            for (std::size_t k = 0; k < rho.size(); ++k) {
                gn[k] = w[n] * tw * threshold_cost_derivative(rho[k], J.threshold) * J.psi[k];
                any = any || gn[k] != 0.0;
            }
            if (!any) continue;
            out.checkpoints.push_back(n);
            out.g.push_back(std::move(gn));
        }
        if (out.g.empty()) {
            out.checkpoints.push_back(base.states.size() - 1);
            out.g.emplace_back(g);
        }
        return out;
    }
    const Field& rho = base.final_state();
    const auto w = overlap_weights(g, J.window_lo, J.window_hi);
    const double dx = g.spacing[0];
    Field gT(g);
    if (J.kind == FunctionalKind::J1) {
        for (std::size_t i = 0; i < rho.size(); ++i) gT[i] = -w[i] * (J.demand[i] - rho[i]);
    } else {
        std::vector<double> we(rho.size());
        for (std::size_t i = 0; i < rho.size(); ++i) we[i] = w[i] * (J.demand[i] - rho[i]);
        const auto B = prefix(we, dx);
        // Transpose of the midpoint prefix sum: a suffix sum.
        double suffix = 0.0;
        for (std::size_t k = rho.size(); k-- > 0;) {
            gT[k] = -w[k] * (suffix + 0.5 * w[k] * B[k] * dx);
            suffix += w[k] * B[k] * dx;
        }
    }
    out.checkpoints.push_back(base.states.size() - 1);
    out.g.push_back(std::move(gT));
    return out;
}

Trajectory ForwardSetup::run(const Field& rho_o, const VelocityModel& model) const {
    if (schedule.empty()) return solve(rho_o, model, solver);
    return solve_on_schedule(rho_o, model, solver, schedule);
}

GradientResult gradient(const CostFunctional& J, const Field& rho_o, const VelocityModel& model,
                        const ForwardSetup& setup, const AdjointOptions& opt) {
    GradientResult out;
    out.base = setup.run(rho_o, model);
    out.value = evaluate(J, out.base);
    out.gradient = adjoint_solve(terminal_sensitivity(J, out.base), out.base, model, opt);
    out.gradient.functional_id = J.id();
    return out;
}

double directional_derivative(const CostFunctional& J, const Trajectory& base, const Field& r_o,
                              const VelocityModel& model) {
    return directional_derivative(terminal_sensitivity(J, base), base, r_o, model);
}

void DescentConfig::validate() const {
    require(max_iters >= 0, "descent.max_iters must be nonnegative");
    require(step0 > 0.0, "descent.step0 must be positive");
    require(armijo_c > 0.0 && armijo_c < 1.0, "descent.armijo_c must lie in (0, 1)");
    require(backtrack > 0.0 && backtrack < 1.0, "descent.backtrack must lie in (0, 1)");
    require(expand >= 1.0, "descent step expansion must be >= 1");
    require(lower < upper, "descent.box must satisfy lower < upper");
    require(tol_grad > 0.0, "descent.tol_grad must be positive");
    require(probes >= 1, "descent needs at least one probe");
}

namespace {

Field clip(const Field& f, double lo, double hi) {
    Field out = f;
    for (auto& v : out.data()) v = std::clamp(v, lo, hi);
    return out;
}

bool active(double rho, double g, double lo, double hi) {
    const double tol = 1e-12 * std::max(1.0, std::abs(rho));
    return (rho <= lo + tol && g > 0.0) || (rho >= hi - tol && g < 0.0);
}

} // namespace

double projected_gradient_norm(const Field& rho, const Field& g, double lower, double upper) {
    Field d(rho.grid());
    for (std::size_t k = 0; k < rho.size(); ++k) d[k] = rho[k] - std::clamp(rho[k] - g[k], lower, upper);
    return norm_l2(d);
}

std::vector<Field> random_probes(const Field& rho, const Field& g, double lower, double upper, int count,
                                 std::uint64_t seed) {
    std::vector<Field> probes;
    for (int p = 0; p < count; ++p) {
        const CounterRng rng(seed, 0x9806e + static_cast<std::uint64_t>(p));
        Field r(rho.grid());
        for (std::size_t k = 0; k < r.size(); ++k) {
            r[k] = active(rho[k], g[k], lower, upper) ? 0.0 : rng.normal(k);
        }
        probes.push_back(std::move(r));
    }
    return probes;
}

double optimality_residual(const CostFunctional& J, const Field& rho_o, const VelocityModel& model,
                           const ForwardSetup& setup, const std::vector<Field>& probes) {
    const Trajectory base = setup.run(rho_o, model);
    const SensitivitySeries s = terminal_sensitivity(J, base);
    double worst = 0.0;
    for (const Field& r : probes) {
        const double n1 = norm_l1(r);
        require(n1 > 0.0, "optimality probes must be nonzero");
        worst = std::max(worst, std::abs(directional_derivative(s, base, r, model)) / n1);
    }
    return worst;
}

OptimizationReport optimize(const CostFunctional& J, const Field& rho_init, const VelocityModel& model,
                            const ForwardSetup& setup, const DescentConfig& cfg) {
    cfg.validate();
    for (double v : rho_init.values()) {
        require(v >= cfg.lower && v <= cfg.upper, "initial control lies outside the descent box");
    }
    OptimizationReport rep;
    Field rho = rho_init;
    AdjointOptions first;
    first.seed = cfg.seed;
    GradientResult cur = gradient(J, rho, model, setup, first);
    rep.dot_test_residual = cur.gradient.dot_test_residual;
    rep.J_initial = cur.value;
    double pg = projected_gradient_norm(rho, cur.gradient.g0, cfg.lower, cfg.upper);
    rep.history.push_back({0, cur.value, pg, 0.0});

    AdjointOptions later;
    later.dot_test = false;
    double s = cfg.step0;
    rep.stop_reason = "max_iters";
    for (int it = 1; it <= cfg.max_iters; ++it) {
        if (pg <= cfg.tol_grad) {
            rep.stop_reason = "tol_grad";
            break;
        }
        const Field& g = cur.gradient.g0;
        bool accepted = false;
        GradientResult next;
        Field trial;
        while (s >= cfg.min_step) {
            trial = clip(combine(1.0, rho, -s, g), cfg.lower, cfg.upper);
            try {
                Trajectory tb = setup.run(trial, model);
                const double Jt = evaluate(J, tb);
                const double decrease = inner(g, rho - trial);
                if (std::isfinite(Jt) && Jt <= cur.value - cfg.armijo_c * decrease) {
                    next.base = std::move(tb);
                    next.value = Jt;
                    accepted = true;
                    break;
                }
            } catch (const NumericalError&) {
            }
            s *= cfg.backtrack;
        }
        if (!accepted) {
            rep.stop_reason = "step_collapse";
            break;
        }
        rho = std::move(trial);
        try {
            next.gradient = adjoint_solve(terminal_sensitivity(J, next.base), next.base, model, later);
        } catch (const NumericalError&) {
            rep.aborted = true;
            rep.stop_reason = "adjoint_failure";
            cur = std::move(next);
            break;
        }
        cur = std::move(next);
        pg = projected_gradient_norm(rho, cur.gradient.g0, cfg.lower, cfg.upper);
        rep.history.push_back({it, cur.value, pg, s});
        rep.iterations = it;
        s = std::min(cfg.max_step, s * cfg.expand);
    }
    if (rep.stop_reason == "max_iters" && pg <= cfg.tol_grad) rep.stop_reason = "tol_grad";
    rep.control = rho;
    rep.J_final = cur.value;
    if (!rep.aborted) {
        const auto probes = random_probes(rho, cur.gradient.g0, cfg.lower, cfg.upper, cfg.probes, cfg.seed);
        rep.optimality_residual = optimality_residual(J, rho, model, setup, probes);
    }
    return rep;
}

} // namespace nlflow
