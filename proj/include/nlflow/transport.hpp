// Conservative line sweeps for frozen velocities, their exact linearisation
// and its transpose. One sweep updates every grid line along one axis.
#pragma once

#include "nlflow/grid.hpp"

#include <string>
#include <vector>

namespace nlflow {

enum class Flux { upwind, lax_friedrichs };

std::string to_string(Flux f);
Flux flux_from_string(const std::string& name);

/// q <- q - dt/h (F[i+1/2] - F[i-1/2]) along `axis`, face velocity the mean of the
/// two adjacent cell velocities `a`. Returns the mass that left through the boundary.
/// `lf_speed` is the dissipation speed of the Lax-Friedrichs flux (unused for upwind).
double transport_sweep(Field& q, const std::vector<double>& a, int axis, double dt, Boundary boundary,
                       Flux flux = Flux::upwind, double lf_speed = 0.0);

/// Derivative of the upwind sweep at (q, a) applied to (r, da); r is updated in place.
void tangent_sweep(Field& r, const Field& q, const std::vector<double>& a, const std::vector<double>& da,
                   int axis, double dt, Boundary boundary);

/// Transpose of tangent_sweep: `bar` enters as the cotangent of the output and leaves as the
/// cotangent of r; the cotangent of da is added to `abar`.
void adjoint_sweep(Field& bar, const Field& q, const std::vector<double>& a, std::vector<double>& abar,
                   int axis, double dt, Boundary boundary);

/// Largest dt * |a| / h over axes and cells.
double courant_number(const VectorField& w, double dt);

} // namespace nlflow
