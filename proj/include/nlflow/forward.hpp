// Explicit conservative solver for d/dt rho + div(rho V(rho)) = 0 with the
// velocity frozen at V(rho_n) over each step, plus existence-time estimates.
#pragma once

#include "nlflow/grid.hpp"
#include "nlflow/models.hpp"
#include "nlflow/transport.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace nlflow {

struct SolverConfig {
    double cfl = 0.45;
    double t_end = 1.0;
    Boundary boundary = Boundary::outflow;
    int record_every = 1;
    Flux flux = Flux::upwind;
    double cfl_limit = 1.0;      ///< hard Courant limit checked by every step
    double blowup_factor = 10.0; ///< guard multiplier on the L-infinity growth bound
    std::size_t max_steps = 50'000'000;

    void validate() const;
};

struct Trajectory {
    Grid grid;
    Boundary boundary = Boundary::outflow;
    Flux flux = Flux::upwind;
    double cfl_limit = 1.0;
    int record_every = 1;
    std::string model_name;

    // Checkpoints: step 0, every record_every steps, and the final step.
    std::vector<double> times;
    std::vector<std::size_t> checkpoint_steps;
    std::vector<Field> states;
    std::vector<VectorField> velocities;
    std::vector<double> linf_bound; ///< |rho_o|_inf exp(t D(t)), D the running max of |div w|_inf

    // Per step.
    std::vector<double> dt_sequence;
    std::vector<double> div_inf;

    double boundary_outflow = 0.0; ///< net mass that left through outflow faces
    double existence_horizon = std::numeric_limits<double>::infinity();
    bool beyond_existence_horizon = false;

    std::size_t steps() const { return dt_sequence.size(); }
    double t_end() const { return times.empty() ? 0.0 : times.back(); }
    const Field& initial() const { return states.front(); }
    const Field& final_state() const { return states.back(); }
    /// Checkpoint index holding `step`, or -1.
    long checkpoint_of(std::size_t step) const;
};

/// One step with a prescribed velocity. Throws NumericalError above the Courant limit.
Field transport_step(const Field& rho, const VectorField& w, double dt, Boundary boundary,
                     Flux flux = Flux::upwind, double cfl_limit = 1.0, double* outflow = nullptr);

/// One step of the nonlocal scheme: w = V(rho), then transport_step.
Field step(const Field& rho, const VelocityModel& model, double dt, Boundary boundary,
           Flux flux = Flux::upwind, double cfl_limit = 1.0);

/// dt = cfl * min spacing / max(max|w|, 1e-12).
double cfl_time_step(const VectorField& w, double cfl);

Trajectory solve(const Field& rho_o, const VelocityModel& model, const SolverConfig& cfg);

/// Same scheme on a prescribed step sequence (cfg.cfl and cfg.t_end are ignored).
Trajectory solve_on_schedule(const Field& rho_o, const VelocityModel& model, const SolverConfig& cfg,
                             const std::vector<double>& dts);

struct ExistenceTime {
    double T = 0.0;
    bool diverging_sum_certificate = false; ///< true when C is bounded, so the local times sum to infinity
};

/// T = ln(beta / alpha) / C(beta).
ExistenceTime existence_time(double alpha, double beta, const VelocityModel& model);
double existence_time(double alpha, double beta, const std::function<double(double)>& C);
/// sup over beta > alpha of the existence time; infinite for models with bounded C.
double existence_horizon(const VelocityModel& model, double alpha);
/// sum_k T(alpha_k, alpha_{k+1}) over an increasing sequence.
double existence_partial_sum(const std::function<double(double)>& C, const std::vector<double>& alphas);

} // namespace nlflow
