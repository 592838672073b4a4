// Discrete tangent of the forward scheme along a recorded trajectory: the
// Gateaux derivative of the solution map with respect to the initial datum.
#pragma once

#include "nlflow/forward.hpp"

#include <vector>

namespace nlflow {

struct TangentSolution {
    std::vector<double> times;
    std::vector<std::size_t> checkpoint_steps;
    std::vector<Field> states; ///< r at the base trajectory's checkpoints

    const Field& final_state() const { return states.back(); }
};

/// Advances (rho, r) by one step: r by the linearised scheme at rho, rho by the forward scheme.
void coupled_step(Field& rho, Field& r, const VelocityModel& model, double dt, Boundary boundary,
                  double cfl_limit = 1.0);

/// r_{n+1} for flux r a + rho DV(rho)(r), both upwinded with the forward scheme's face velocity a.
Field tangent_step(const Field& r, const Field& rho, const VelocityModel& model, double dt, Boundary boundary,
                   double cfl_limit = 1.0);

/// Replays base.dt_sequence; returns r at every checkpoint of `base`.
TangentSolution tangent_solve(const Field& r_o, const Trajectory& base, const VelocityModel& model);

/// exp(K t max|rho|_{W11}) exp(C t) |r_o|_1 with C, K evaluated at max |rho|_inf over [0, t].
double tangent_l1_bound(const Field& r_o, const Trajectory& base, const VelocityModel& model, double t);

} // namespace nlflow
