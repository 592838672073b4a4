// Characteristics of linear transport d/dt r + div(r w) = R: RK4 flow map,
// Jacobian, and the representation formula as an exact-solution oracle.
#pragma once

#include "nlflow/forward.hpp"
#include "nlflow/grid.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace nlflow {

using VelocityFn = std::function<Point(double t, const Point& x)>;
using ScalarFn = std::function<double(double t, const Point& x)>;

class FlowMap {
public:
    /// `div` may be empty, in which case the divergence is taken by centred differences of `w`.
    FlowMap(int dim, VelocityFn w, ScalarFn div, double h_ode);

    /// Velocity interpolated from the recorded checkpoints: bilinear in space, linear in time.
    /// h_ode defaults to the smallest recorded step.
    static FlowMap from_trajectory(const Trajectory& tr, double h_ode = 0.0);

    int dim() const { return dim_; }
    double h_ode() const { return h_; }
    Point velocity(double t, const Point& x) const { return w_(t, x); }
    double divergence(double t, const Point& x) const;

    /// Points outside [lower - pad, upper + pad] count as escaped.
    void set_domain(const Point& lower, const Point& upper);
    bool inside(const Point& x) const;

private:
    int dim_;
    VelocityFn w_;
    ScalarFn div_;
    double h_;
    Point lo_{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    Point hi_{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
};

struct TracePoint {
    Point x;
    bool escaped = false;
};

/// X(t; t_o, x_o), forwards or backwards in time.
TracePoint trace(const Point& x_o, double t_o, double t, const FlowMap& flow);

/// J(t, y) = exp(int_0^t div w(s, X(s; 0, y)) ds), trapezoidal quadrature on the RK4 substeps.
double jacobian(const Point& y, double t, const FlowMap& flow);

/// r(t, x) = r_o(X(0; t, x)) exp(-int_0^t div w) + int_0^t R(s, X(s; t, x)) exp(-int_s^t div w) ds
/// at every cell centre of `grid`. Escaped paths contribute no initial-datum term. R may be empty.
Field representation_solution(const std::function<double(const Point&)>& r_o, const Grid& grid,
                              const ScalarFn& R, const FlowMap& flow, double t);
/// Initial datum given as cell samples, interpolated bilinearly.
Field representation_solution(const Field& r_o, const ScalarFn& R, const FlowMap& flow, double t);

} // namespace nlflow
