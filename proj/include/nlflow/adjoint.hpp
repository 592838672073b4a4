// Exact transpose of the discrete tangent propagator: turns sensitivities of a
// functional with respect to the states into its gradient in the initial datum.
#pragma once

#include "nlflow/tangent.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nlflow {

/// dJ = <g, r(time)> in the volume-weighted inner product.
struct TerminalSensitivity {
    Field g;
    double time = 0.0;
};

/// dJ = sum_k <g[k], r(t_{checkpoints[k]})>; quadrature weights are already folded into g.
struct SensitivitySeries {
    std::vector<std::size_t> checkpoints;
    std::vector<Field> g;
};

SensitivitySeries as_series(const TerminalSensitivity& s, const Trajectory& base);

struct Gradient {
    Field g0; ///< L2 Riesz representative: dJ(r_o) = <g0, r_o>
    std::string trajectory_id;
    std::string functional_id;
    double dot_test_residual = 0.0;
    bool dot_tested = false;
};

struct AdjointOptions {
    bool dot_test = true;
    std::uint64_t seed = 0x5eed;
    double dot_test_fail = 1e-8;
};

Gradient adjoint_solve(const SensitivitySeries& s, const Trajectory& base, const VelocityModel& model,
                       const AdjointOptions& opt = {});
Gradient adjoint_solve(const TerminalSensitivity& s, const Trajectory& base, const VelocityModel& model,
                       const AdjointOptions& opt = {});

/// sum_k <g[k], r(t_k)> with r from tangent_solve(r_o).
double directional_derivative(const SensitivitySeries& s, const Trajectory& base, const Field& r_o,
                              const VelocityModel& model);

/// |<A r_o, g> - <r_o, A^T g>| / (|r_o|_2 sum_k |g_k|_2).
double dot_test_residual(const SensitivitySeries& s, const Gradient& grad, const Trajectory& base,
                         const VelocityModel& model, const Field& r_o);

/// Short identifier of a trajectory (grid, schedule length, final time, hash of the final state).
std::string trajectory_id(const Trajectory& base);

} // namespace nlflow
