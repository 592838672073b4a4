#include "nlflow/forward.hpp"

#include "nlflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nlflow {

void SolverConfig::validate() const {
    require(cfl > 0.0 && cfl <= 1.0, "solver.cfl must lie in (0, 1]");
    require(t_end > 0.0 && std::isfinite(t_end), "solver.t_end must be positive");
    require(record_every >= 1, "solver.record_every must be >= 1");
    require(cfl_limit > 0.0, "solver.cfl_limit must be positive");
    require(blowup_factor > 1.0, "blow-up factor must exceed 1");
}

long Trajectory::checkpoint_of(std::size_t step) const {
    auto it = std::lower_bound(checkpoint_steps.begin(), checkpoint_steps.end(), step);
    if (it == checkpoint_steps.end() || *it != step) return -1;
    return static_cast<long>(it - checkpoint_steps.begin());
}

Field transport_step(const Field& rho, const VectorField& w, double dt, Boundary boundary, Flux flux,
                     double cfl_limit, double* outflow) {
    check_same_grid(rho.grid(), w.grid, "transport step");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw NumericalError("time step must be positive and finite");
    const double courant = courant_number(w, dt);
    if (courant > cfl_limit * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "CFL violation: Courant number " << courant << " exceeds " << cfl_limit;
        throw NumericalError(msg.str());
    }
    const double lf_speed = w.max_abs_component();
    Field out = rho;
    double gone = 0.0;
    for (int axis = 0; axis < rho.grid().dim; ++axis) {
        gone += transport_sweep(out, w.component(axis), axis, dt, boundary, flux, lf_speed);
    }
    if (outflow) *outflow = gone;
    return out;
}

Field step(const Field& rho, const VelocityModel& model, double dt, Boundary boundary, Flux flux,
           double cfl_limit) {
    return transport_step(rho, model.velocity(rho), dt, boundary, flux, cfl_limit);
}

double cfl_time_step(const VectorField& w, double cfl) {
    double inv = 0.0;
    for (int axis = 0; axis < w.grid.dim; ++axis) {
        double m = 0.0;
        for (double v : w.component(axis)) m = std::max(m, std::abs(v));
        inv = std::max(inv, std::max(m, 1e-12) / w.grid.spacing[axis]);
    }
    return cfl / inv;
}

namespace {

template <class NextDt>
Trajectory march(const Field& rho_o, const VelocityModel& model, const SolverConfig& cfg, NextDt next_dt) {
    if (rho_o.grid().dim != model.dim()) {
        throw ConfigError("model " + model.name() + " expects a " + std::to_string(model.dim()) + "-D grid");
    }
    if (!rho_o.all_finite()) throw ConfigError("initial datum contains non-finite values");

    Trajectory tr;
    tr.grid = rho_o.grid();
    tr.boundary = cfg.boundary;
    tr.flux = cfg.flux;
    tr.cfl_limit = cfg.cfl_limit;
    tr.record_every = cfg.record_every;
    tr.model_name = model.name();

    const double linf0 = norm_linf(rho_o);
    const ModelFlags flags = model.flags();
    if (!flags.satisfies_A && !flags.satisfies_B) tr.existence_horizon = existence_horizon(model, linf0);

    Field rho = rho_o;
    VectorField w = model.velocity(rho);
    double t = 0.0;
    double dmax = 0.0;
    auto record = [&](std::size_t n) {
        tr.times.push_back(t);
        tr.checkpoint_steps.push_back(n);
        tr.states.push_back(rho);
        tr.velocities.push_back(w);
        tr.linf_bound.push_back(linf0 * std::exp(t * dmax));
    };
    record(0);

    for (std::size_t n = 0;; ++n) {
        bool last = false;
        const double dt = next_dt(n, t, w, last);
        if (dt <= 0.0) break;
        if (n >= cfg.max_steps) throw NumericalError("step budget exhausted before t_end");

        const double div = norm_linf(discrete_divergence(w, cfg.boundary));
        double gone = 0.0;
        rho = transport_step(rho, w, dt, cfg.boundary, cfg.flux, cfg.cfl_limit, &gone);
        tr.dt_sequence.push_back(dt);
        tr.div_inf.push_back(div);
        tr.boundary_outflow += gone;
        dmax = std::max(dmax, div);
        t += dt;

        if (!rho.all_finite()) throw NumericalError("non-finite density at t = " + std::to_string(t));
        const double linf = norm_linf(rho);
        const double guard = cfg.blowup_factor * linf0 * std::exp(t * dmax);
        if (linf > guard) {
            std::ostringstream msg;
            msg << "blow-up guard: |rho|_inf = " << linf << " exceeds " << guard << " at t = " << t;
            throw NumericalError(msg.str());
        }

        w = model.velocity(rho);
        if (last || (n + 1) % static_cast<std::size_t>(cfg.record_every) == 0) record(n + 1);
        if (last) break;
    }
    tr.beyond_existence_horizon = tr.t_end() > tr.existence_horizon;
    return tr;
}

} // namespace

Trajectory solve(const Field& rho_o, const VelocityModel& model, const SolverConfig& cfg) {
    cfg.validate();
    const double t_end = cfg.t_end;
    return march(rho_o, model, cfg, [&](std::size_t, double t, const VectorField& w, bool& last) {
        const double remaining = t_end - t;
        if (remaining <= 1e-14 * t_end) return 0.0;
        double dt = cfl_time_step(w, cfg.cfl);
        if (dt >= remaining * (1.0 - 1e-12)) {
            dt = remaining;
            last = true;
        }
        return dt;
    });
}

Trajectory solve_on_schedule(const Field& rho_o, const VelocityModel& model, const SolverConfig& cfg,
                             const std::vector<double>& dts) {
    require(!dts.empty(), "step schedule is empty");
    SolverConfig c = cfg;
    c.t_end = 1.0;
    c.validate();
    return march(rho_o, model, c, [&](std::size_t n, double, const VectorField&, bool& last) {
        if (n >= dts.size()) return 0.0;
        last = n + 1 == dts.size();
        return dts[n];
    });
}

double existence_time(double alpha, double beta, const std::function<double(double)>& C) {
    require(alpha > 0.0 && beta > alpha, "existence time needs beta > alpha > 0");
    const double c = C(beta);
    require(c > 0.0, "existence time needs C(beta) > 0");
    return std::log(beta / alpha) / c;
}

ExistenceTime existence_time(double alpha, double beta, const VelocityModel& model) {
    ExistenceTime out;
    out.T = existence_time(alpha, beta, [&](double b) { return model.lipschitz_scale(b); });
    out.diverging_sum_certificate = model.flags().satisfies_B;
    return out;
}

double existence_horizon(const VelocityModel& model, double alpha) {
    if (model.flags().satisfies_B || !(alpha > 0.0)) return std::numeric_limits<double>::infinity();
    auto T = [&](double s) { // beta = alpha e^s
        const double c = model.lipschitz_scale(alpha * std::exp(s));
        return c > 0.0 ? s / c : std::numeric_limits<double>::infinity();
    };
    double best_s = 0.0;
    double best = 0.0;
    const int samples = 4000;
    for (int k = 1; k <= samples; ++k) {
        const double s = 60.0 * k / samples;
        const double v = T(s);
        if (v > best) {
            best = v;
            best_s = s;
        }
    }
    if (!std::isfinite(best)) return best;
    // golden-section refinement around the best sample
    double a = std::max(1e-12, best_s - 60.0 / samples);
    double b = best_s + 60.0 / samples;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100; ++it) {
        const double x1 = b - g * (b - a);
        const double x2 = a + g * (b - a);
        if (T(x1) > T(x2)) b = x2;
        else a = x1;
    }
    return std::max(best, T(0.5 * (a + b)));
}

double existence_partial_sum(const std::function<double(double)>& C, const std::vector<double>& alphas) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < alphas.size(); ++k) s += existence_time(alphas[k], alphas[k + 1], C);
    return s;
}

} // namespace nlflow
