// Cost functionals on forward trajectories, their sensitivities, and
// projected gradient descent over the initial datum.
#pragma once

#include "nlflow/adjoint.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace nlflow {

enum class FunctionalKind { J1, J2, JPED };

std::string to_string(FunctionalKind k);
FunctionalKind functional_from_string(const std::string& name);

struct CostFunctional {
    FunctionalKind kind = FunctionalKind::J1;
    double horizon = 1.0;

    // J1 / J2: demand sampled at cell centres, integration window.
    Field demand;
    double window_lo = 0.0;
    double window_hi = 1.0;

    // JPED: f(rho) = max(0, rho - threshold)^2 weighted by psi(t, x) = psi_time(t) * g(x).
    double threshold = 0.0;
    Field psi;
    std::function<double(double)> psi_time; ///< empty means 1

    std::string id() const;
};

CostFunctional make_tracking(FunctionalKind kind, Field demand, double horizon, double window_lo = 0.0,
                             double window_hi = 1.0);
CostFunctional make_threshold(double threshold, Field psi, double horizon);

double threshold_cost(double rho, double threshold);
double threshold_cost_derivative(double rho, double threshold);

/// Tensor-product C-infinity indicator: 1 on [core_lo, core_hi], 0 beyond `margin`.
Field smooth_indicator(const Grid& grid, const Point& core_lo, const Point& core_hi, double margin);

double evaluate(const CostFunctional& J, const Trajectory& base);
/// Sensitivities with respect to the checkpoint states: the terminal state for J1/J2,
/// every checkpoint (trapezoid weights folded in) for JPED.
SensitivitySeries terminal_sensitivity(const CostFunctional& J, const Trajectory& base);

/// Forward runs used by the control layer: CFL-adaptive, or a fixed step schedule.
struct ForwardSetup {
    SolverConfig solver;
    std::vector<double> schedule;

    Trajectory run(const Field& rho_o, const VelocityModel& model) const;
};

struct GradientResult {
    Trajectory base;
    double value = 0.0;
    Gradient gradient;
};

GradientResult gradient(const CostFunctional& J, const Field& rho_o, const VelocityModel& model,
                        const ForwardSetup& setup, const AdjointOptions& opt = {});

double directional_derivative(const CostFunctional& J, const Trajectory& base, const Field& r_o,
                              const VelocityModel& model);

struct DescentConfig {
    int max_iters = 200;
    double step0 = 1.0;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    double expand = 2.0;
    double max_step = 1e6;
    double min_step = 1e-14;
    double lower = 0.0;
    double upper = std::numeric_limits<double>::infinity();
    double tol_grad = 1e-10;
    int probes = 5;
    std::uint64_t seed = 1;

    void validate() const;
};

struct IterateRecord {
    int iter = 0;
    double J = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;
};

struct OptimizationReport {
    Field control;
    std::vector<IterateRecord> history;
    double J_initial = 0.0;
    double J_final = 0.0;
    double optimality_residual = 0.0;
    double dot_test_residual = 0.0;
    int iterations = 0;
    std::string stop_reason;
    bool aborted = false;
};

/// L2 norm of rho - clip(rho - g).
double projected_gradient_norm(const Field& rho, const Field& g, double lower, double upper);

OptimizationReport optimize(const CostFunctional& J, const Field& rho_init, const VelocityModel& model,
                            const ForwardSetup& setup, const DescentConfig& cfg);

/// max over probes of |DJ(rho_o)(r)| / |r|_1 computed with tangent solves.
double optimality_residual(const CostFunctional& J, const Field& rho_o, const VelocityModel& model,
                           const ForwardSetup& setup, const std::vector<Field>& probes);

/// Seeded normal probes, zeroed on cells where the box constraint is active for gradient g.
std::vector<Field> random_probes(const Field& rho, const Field& g, double lower, double upper, int count,
                                 std::uint64_t seed);

} // namespace nlflow
