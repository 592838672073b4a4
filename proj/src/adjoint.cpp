#include "nlflow/adjoint.hpp"

#include "nlflow/errors.hpp"
#include "nlflow/rng.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

namespace nlflow {

SensitivitySeries as_series(const TerminalSensitivity& s, const Trajectory& base) {
    require(!base.states.empty(), "base trajectory is empty");
    const double T = base.t_end();
    if (std::abs(s.time - T) > 1e-12 * std::max(1.0, T)) {
        throw ConfigError("terminal sensitivity time does not match the trajectory end time");
    }
    check_same_grid(base.grid, s.g.grid(), "terminal sensitivity");
    SensitivitySeries out;
    out.checkpoints.push_back(base.states.size() - 1);
    out.g.push_back(s.g);
    return out;
}

namespace {

void check_series(const SensitivitySeries& s, const Trajectory& base) {
    require(!base.states.empty(), "base trajectory is empty");
    require(s.checkpoints.size() == s.g.size(), "sensitivity series is ragged");
    for (std::size_t k = 0; k < s.g.size(); ++k) {
        require(s.checkpoints[k] < base.states.size(), "sensitivity refers to a missing checkpoint");
        check_same_grid(base.grid, s.g[k].grid(), "sensitivity");
    }
    if (base.flux != Flux::upwind) throw ConfigError("tangent and adjoint solvers support the upwind flux only");
}

// Transpose of one coupled step at rho_n applied to the cotangent of r_{n+1}.
Field reverse_step(const Field& rho, const Field& lam_next, const VelocityModel& model, double dt,
                   Boundary boundary) {
    const auto lin = model.linearize(rho);
    const VectorField& w = lin->velocity();
    const int dim = rho.grid().dim;
    std::vector<Field> q;
    q.reserve(dim);
    q.push_back(rho);
    for (int axis = 0; axis + 1 < dim; ++axis) {
        Field next = q.back();
        transport_sweep(next, w.component(axis), axis, dt, boundary);
        q.push_back(std::move(next));
    }
    Field bar = lam_next;
    VectorField wbar(rho.grid());
    for (int axis = dim - 1; axis >= 0; --axis) {
        adjoint_sweep(bar, q[axis], w.component(axis), wbar.component(axis), axis, dt, boundary);
    }
    bar += lin->apply_transpose(wbar);
    return bar;
}

double weighted_l2(const Field& f) { return norm_l2(f); }

} // namespace

double directional_derivative(const SensitivitySeries& s, const Trajectory& base, const Field& r_o,
                              const VelocityModel& model) {
    check_series(s, base);
    const TangentSolution tan = tangent_solve(r_o, base, model);
    double d = 0.0;
    for (std::size_t k = 0; k < s.g.size(); ++k) d += inner(s.g[k], tan.states[s.checkpoints[k]]);
    return d;
}

double dot_test_residual(const SensitivitySeries& s, const Gradient& grad, const Trajectory& base,
                         const VelocityModel& model, const Field& r_o) {
    const double lhs = directional_derivative(s, base, r_o, model);
    const double rhs = inner(r_o, grad.g0);
    double gnorm = 0.0;
    for (const auto& g : s.g) gnorm += weighted_l2(g);
    const double denom = weighted_l2(r_o) * gnorm;
    if (denom == 0.0) return std::abs(lhs - rhs);
    return std::abs(lhs - rhs) / denom;
}

std::string trajectory_id(const Trajectory& base) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    if (!base.states.empty()) {
        for (double v : base.final_state().values()) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            h = splitmix64(h ^ bits);
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    std::ostringstream id;
    id << base.model_name << "/" << base.grid.cells[0];
    if (base.grid.dim == 2) id << "x" << base.grid.cells[1];
    id << "/" << base.steps() << "steps/" << buf;
    return id.str();
}

Gradient adjoint_solve(const SensitivitySeries& s, const Trajectory& base, const VelocityModel& model,
                       const AdjointOptions& opt) {
    check_series(s, base);
    const std::size_t ncheck = base.states.size();
    std::vector<const Field*> source(ncheck, nullptr);
    std::vector<Field> merged;
    merged.reserve(s.g.size());
    for (std::size_t k = 0; k < s.g.size(); ++k) {
        const std::size_t c = s.checkpoints[k];
        if (source[c]) {
            merged.push_back(*source[c] + s.g[k]);
        } else {
            merged.push_back(s.g[k]);
        }
        source[c] = &merged.back();
    }

    Field lam(base.grid);
    if (source[ncheck - 1]) lam += *source[ncheck - 1];
    std::vector<Field> rho_seg;
    for (std::size_t c = ncheck - 1; c-- > 0;) {
        // Recompute the forward states of segment [c, c+1) from its checkpoint.
        const std::size_t n0 = base.checkpoint_steps[c];
        const std::size_t n1 = base.checkpoint_steps[c + 1];
        rho_seg.clear();
        rho_seg.push_back(base.states[c]);
        for (std::size_t n = n0; n + 1 < n1; ++n) {
            rho_seg.push_back(transport_step(rho_seg.back(), model.velocity(rho_seg.back()), base.dt_sequence[n],
                                             base.boundary, Flux::upwind, base.cfl_limit));
        }
        for (std::size_t n = n1; n-- > n0;) {
            lam = reverse_step(rho_seg[n - n0], lam, model, base.dt_sequence[n], base.boundary);
        }
        if (source[c]) lam += *source[c];
    }

    Gradient out;
    out.g0 = std::move(lam);
    out.trajectory_id = trajectory_id(base);
    if (opt.dot_test) {
        const CounterRng rng(opt.seed, 0xd07);
        Field r_o(base.grid);
        for (std::size_t k = 0; k < r_o.size(); ++k) r_o[k] = rng.normal(k);
        out.dot_test_residual = dot_test_residual(s, out, base, model, r_o);
        out.dot_tested = true;
        if (!(out.dot_test_residual <= opt.dot_test_fail)) {
            std::ostringstream msg;
            msg << "adjoint dot-product test failed: residual " << out.dot_test_residual;
            throw NumericalError(msg.str());
        }
    }
    return out;
}

Gradient adjoint_solve(const TerminalSensitivity& s, const Trajectory& base, const VelocityModel& model,
                       const AdjointOptions& opt) {
    return adjoint_solve(as_series(s, base), base, model, opt);
}

} // namespace nlflow
