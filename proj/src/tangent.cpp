#include "nlflow/tangent.hpp"

#include "nlflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nlflow {

namespace {

void check_courant(const VectorField& w, double dt, double limit) {
    const double c = courant_number(w, dt);
    if (c > limit * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "CFL violation in tangent step: Courant number " << c << " exceeds " << limit;
        throw NumericalError(msg.str());
    }
}

} // namespace

void coupled_step(Field& rho, Field& r, const VelocityModel& model, double dt, Boundary boundary,
                  double cfl_limit) {
    check_same_grid(rho.grid(), r.grid(), "tangent step");
    const auto lin = model.linearize(rho);
    const VectorField& w = lin->velocity();
    check_courant(w, dt, cfl_limit);
    const VectorField dw = lin->apply(r);
    for (int axis = 0; axis < rho.grid().dim; ++axis) {
        tangent_sweep(r, rho, w.component(axis), dw.component(axis), axis, dt, boundary);
        transport_sweep(rho, w.component(axis), axis, dt, boundary);
    }
}

Field tangent_step(const Field& r, const Field& rho, const VelocityModel& model, double dt, Boundary boundary,
                   double cfl_limit) {
    Field q = rho;
    Field out = r;
    coupled_step(q, out, model, dt, boundary, cfl_limit);
    return out;
}

TangentSolution tangent_solve(const Field& r_o, const Trajectory& base, const VelocityModel& model) {
    require(!base.states.empty(), "base trajectory is empty");
    check_same_grid(base.grid, r_o.grid(), "tangent solve");
    if (base.flux != Flux::upwind) throw ConfigError("tangent and adjoint solvers support the upwind flux only");

    TangentSolution out;
    out.times = base.times;
    out.checkpoint_steps = base.checkpoint_steps;
    out.states.reserve(base.states.size());
    out.states.push_back(r_o);

    Field r = r_o;
    for (std::size_t c = 0; c + 1 < base.states.size(); ++c) {
        Field rho = base.states[c];
        for (std::size_t n = base.checkpoint_steps[c]; n < base.checkpoint_steps[c + 1]; ++n) {
            coupled_step(rho, r, model, base.dt_sequence[n], base.boundary, base.cfl_limit);
        }
        out.states.push_back(r);
    }
    return out;
}

double tangent_l1_bound(const Field& r_o, const Trajectory& base, const VelocityModel& model, double t) {
    const double r1 = norm_l1(r_o);
    if (r1 == 0.0 || t <= 0.0) return r1;
    double beta = 0.0;
    double w11 = 0.0;
    for (std::size_t c = 0; c < base.states.size() && base.times[c] <= t * (1.0 + 1e-12); ++c) {
        beta = std::max(beta, norm_linf(base.states[c]));
        w11 = std::max(w11, discrete_w11(base.states[c]));
    }
    const double C = model.lipschitz_scale(beta);
    const double K = model.derivative_scale(beta);
    return std::exp(K * t * w11) * std::exp(C * t) * r1;
}

} // namespace nlflow
