#include "nlflow/characteristics.hpp"

#include "nlflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace nlflow {

FlowMap::FlowMap(int dim, VelocityFn w, ScalarFn div, double h_ode)
    : dim_(dim), w_(std::move(w)), div_(std::move(div)), h_(h_ode) {
    require(dim == 1 || dim == 2, "flow map dimension must be 1 or 2");
    require(static_cast<bool>(w_), "flow map needs a velocity");
    require(h_ode > 0.0, "h_ode must be positive");
}

double FlowMap::divergence(double t, const Point& x) const {
    if (div_) return div_(t, x);
    double d = 0.0;
    for (int a = 0; a < dim_; ++a) {
        const double e = 1e-6 * std::max(1.0, std::abs(x[a]));
        Point p = x;
        Point m = x;
        p[a] += e;
        m[a] -= e;
        d += (w_(t, p)[a] - w_(t, m)[a]) / (2.0 * e);
    }
    return d;
}

void FlowMap::set_domain(const Point& lower, const Point& upper) {
    lo_ = lower;
    hi_ = upper;
}

bool FlowMap::inside(const Point& x) const {
    for (int a = 0; a < dim_; ++a) {
        if (!(x[a] >= lo_[a] && x[a] <= hi_[a])) return false;
    }
    return true;
}

namespace {

struct Recorded {
    std::vector<double> times;
    std::vector<VectorField> w;
    std::vector<std::vector<double>> div;
    Grid grid;
};

// Locates t among the checkpoint times; returns the lower index and the weight of the upper one.
void bracket(const std::vector<double>& times, double t, std::size_t& k, double& theta) {
    if (times.size() == 1 || t <= times.front()) {
        k = 0;
        theta = 0.0;
        return;
    }
    if (t >= times.back()) {
        k = times.size() - 2;
        theta = 1.0;
        return;
    }
    k = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin()) - 1;
    theta = (t - times[k]) / (times[k + 1] - times[k]);
}

} // namespace

FlowMap FlowMap::from_trajectory(const Trajectory& tr, double h_ode) {
    require(!tr.velocities.empty(), "trajectory has no recorded velocities");
    auto rec = std::make_shared<Recorded>();
    rec->times = tr.times;
    rec->w = tr.velocities;
    rec->grid = tr.grid;
    for (const auto& w : tr.velocities) {
        rec->div.push_back(discrete_divergence(w, tr.boundary).data());
    }
    const int dim = tr.grid.dim;
    VelocityFn vel = [rec, dim](double t, const Point& x) {
        std::size_t k;
        double th;
        bracket(rec->times, t, k, th);
        Point out{0.0, 0.0};
        for (int a = 0; a < dim; ++a) {
            const double v0 = interpolate(rec->grid, rec->w[k].component(a), x);
            const double v1 = rec->times.size() > 1 ? interpolate(rec->grid, rec->w[k + 1].component(a), x) : v0;
            out[a] = (1.0 - th) * v0 + th * v1;
        }
        return out;
    };
    ScalarFn div = [rec](double t, const Point& x) {
        std::size_t k;
        double th;
        bracket(rec->times, t, k, th);
        const double d0 = interpolate(rec->grid, rec->div[k], x);
        const double d1 = rec->times.size() > 1 ? interpolate(rec->grid, rec->div[k + 1], x) : d0;
        return (1.0 - th) * d0 + th * d1;
    };
    if (!(h_ode > 0.0)) {
        h_ode = tr.dt_sequence.empty() ? 1e-3 : *std::min_element(tr.dt_sequence.begin(), tr.dt_sequence.end());
    }
    FlowMap flow(dim, vel, div, h_ode);
    flow.set_domain(tr.grid.origin, tr.grid.upper());
    return flow;
}

namespace {

Point rk4(const FlowMap& flow, double t, const Point& x, double h) {
    auto add = [](const Point& p, const Point& k, double s) { return Point{p[0] + s * k[0], p[1] + s * k[1]}; };
    const Point k1 = flow.velocity(t, x);
    const Point k2 = flow.velocity(t + 0.5 * h, add(x, k1, 0.5 * h));
    const Point k3 = flow.velocity(t + 0.5 * h, add(x, k2, 0.5 * h));
    const Point k4 = flow.velocity(t + h, add(x, k3, h));
    Point out = x;
    for (int a = 0; a < flow.dim(); ++a) out[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
    return out;
}

// Path nodes X(tau_k) for tau from t_o to t in equal substeps no longer than h_ode.
struct Path {
    std::vector<double> tau;
    std::vector<Point> x;
    bool escaped = false;
};

Path integrate_path(const Point& x_o, double t_o, double t, const FlowMap& flow) {
    Path p;
    const double span = t - t_o;
    const int n = span == 0.0 ? 0 : static_cast<int>(std::ceil(std::abs(span) / flow.h_ode() - 1e-9));
    const double h = n == 0 ? 0.0 : span / n;
    p.tau.reserve(n + 1);
    p.x.reserve(n + 1);
    Point x = x_o;
    p.tau.push_back(t_o);
    p.x.push_back(x);
    for (int k = 0; k < n; ++k) {
        x = rk4(flow, t_o + k * h, x, h);
        p.tau.push_back(k + 1 == n ? t : t_o + (k + 1) * h);
        p.x.push_back(x);
        if (!flow.inside(x)) {
            p.escaped = true;
            break;
        }
    }
    return p;
}

} // namespace

TracePoint trace(const Point& x_o, double t_o, double t, const FlowMap& flow) {
    const Path p = integrate_path(x_o, t_o, t, flow);
    return {p.x.back(), p.escaped};
}

double jacobian(const Point& y, double t, const FlowMap& flow) {
    const Path p = integrate_path(y, 0.0, t, flow);
    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < p.x.size(); ++k) {
        integral += 0.5 * (p.tau[k + 1] - p.tau[k]) *
                    (flow.divergence(p.tau[k], p.x[k]) + flow.divergence(p.tau[k + 1], p.x[k + 1]));
    }
    return std::exp(integral);
}

Field representation_solution(const std::function<double(const Point&)>& r_o, const Grid& grid,
                              const ScalarFn& R, const FlowMap& flow, double t) {
    require(grid.dim == flow.dim(), "flow map and grid dimensions differ");
    require(t >= 0.0, "representation time must be nonnegative");
    Field out(grid);
    const std::size_t n = grid.size();
#pragma omp parallel for schedule(dynamic, 64)
    for (std::size_t c = 0; c < n; ++c) {
        // Backward path from (t, x) to time 0: tau decreasing from t.
        const Path p = integrate_path(grid.center_of(c), t, 0.0, flow);
        const std::size_t m = p.x.size();
        // I[k] = int_{tau_k}^{t} div w along the path.
        std::vector<double> I(m, 0.0);
        std::vector<double> div(m);
        for (std::size_t k = 0; k < m; ++k) div[k] = flow.divergence(p.tau[k], p.x[k]);
        for (std::size_t k = 1; k < m; ++k) I[k] = I[k - 1] + 0.5 * (p.tau[k - 1] - p.tau[k]) * (div[k - 1] + div[k]);
        double value = 0.0;
        if (!p.escaped) value = r_o(p.x.back()) * std::exp(-I.back());
        if (R) {
            for (std::size_t k = 1; k < m; ++k) {
                const double a = R(p.tau[k - 1], p.x[k - 1]) * std::exp(-I[k - 1]);
                const double b = R(p.tau[k], p.x[k]) * std::exp(-I[k]);
                value += 0.5 * (p.tau[k - 1] - p.tau[k]) * (a + b);
            }
        }
        out[c] = value;
    }
    return out;
}

Field representation_solution(const Field& r_o, const ScalarFn& R, const FlowMap& flow, double t) {
    const Field& f = r_o;
    return representation_solution([&f](const Point& x) { return interpolate(f, x); }, r_o.grid(), R, flow, t);
}

} // namespace nlflow
