#include "nlflow/transport.hpp"

#include "nlflow/errors.hpp"

#include <algorithm>
#include <cmath>

namespace nlflow {

std::string to_string(Flux f) { return f == Flux::lax_friedrichs ? "lax_friedrichs" : "upwind"; }

Flux flux_from_string(const std::string& name) {
    if (name == "upwind") return Flux::upwind;
    if (name == "lax_friedrichs") return Flux::lax_friedrichs;
    throw ConfigError("unknown flux '" + name + "'");
}

namespace {

struct Lines {
    int n;      // cells along the sweep
    int count;  // number of lines
    std::size_t stride;
    std::size_t line_stride;

    Lines(const Grid& g, int axis) {
        if (axis == 0) {
            n = g.cells[0];
            count = g.dim == 2 ? g.cells[1] : 1;
            stride = 1;
            line_stride = static_cast<std::size_t>(g.cells[0]);
        } else {
            n = g.cells[1];
            count = g.cells[0];
            stride = static_cast<std::size_t>(g.cells[0]);
            line_stride = 1;
        }
    }
    std::size_t at(int line, int k) const { return line * line_stride + k * stride; }
};

// Cells adjacent to face f (face f separates cell f-1 from cell f); ghosts copy the boundary cell.
inline void face_cells(int f, int n, bool periodic, int& L, int& R) {
    if (periodic) {
        L = f == 0 ? n - 1 : f - 1;
        R = f == n ? 0 : f;
    } else {
        L = f == 0 ? 0 : f - 1;
        R = f == n ? n - 1 : f;
    }
}

void check_axis(const Grid& g, int axis) {
    if (axis < 0 || axis >= g.dim) throw ConfigError("sweep axis out of range");
}

} // namespace

double transport_sweep(Field& q, const std::vector<double>& a, int axis, double dt, Boundary boundary,
                       Flux flux, double lf_speed) {
    const Grid& g = q.grid();
    check_axis(g, axis);
    const Lines lines(g, axis);
    const int n = lines.n;
    const bool periodic = boundary == Boundary::periodic;
    const double lam = dt / g.spacing[axis];
    const double transverse = g.cell_volume() / g.spacing[axis];
    std::vector<double> out_per_line(lines.count, 0.0);
    auto& data = q.data();

#pragma omp parallel
    {
        std::vector<double> ql(n), al(n), F(n + 1);
#pragma omp for schedule(static)
        for (int l = 0; l < lines.count; ++l) {
            for (int k = 0; k < n; ++k) {
                ql[k] = data[lines.at(l, k)];
                al[k] = a[lines.at(l, k)];
            }
            const int faces = periodic ? n : n + 1;
            for (int f = 0; f < faces; ++f) {
                int L, R;
                face_cells(f, n, periodic, L, R);
                const double af = 0.5 * (al[L] + al[R]);
                if (flux == Flux::upwind) {
                    F[f] = af * (af > 0.0 ? ql[L] : ql[R]);
                } else {
                    F[f] = 0.5 * af * (ql[L] + ql[R]) - 0.5 * lf_speed * (ql[R] - ql[L]);
                }
            }
            if (periodic) F[n] = F[0];
            for (int k = 0; k < n; ++k) data[lines.at(l, k)] = ql[k] - lam * (F[k + 1] - F[k]);
            if (!periodic) out_per_line[l] = (F[n] - F[0]) * dt * transverse;
        }
    }
    double out = 0.0;
    for (double v : out_per_line) out += v;
    return out;
}

void tangent_sweep(Field& r, const Field& q, const std::vector<double>& a, const std::vector<double>& da,
                   int axis, double dt, Boundary boundary) {
    const Grid& g = q.grid();
    check_axis(g, axis);
    check_same_grid(g, r.grid(), "tangent sweep");
    const Lines lines(g, axis);
    const int n = lines.n;
    const bool periodic = boundary == Boundary::periodic;
    const double lam = dt / g.spacing[axis];
    auto& rd = r.data();
    const auto& qd = q.data();

#pragma omp parallel
    {
        std::vector<double> ql(n), rl(n), al(n), dl(n), F(n + 1);
#pragma omp for schedule(static)
        for (int l = 0; l < lines.count; ++l) {
            for (int k = 0; k < n; ++k) {
                const auto idx = lines.at(l, k);
                ql[k] = qd[idx];
                rl[k] = rd[idx];
                al[k] = a[idx];
                dl[k] = da[idx];
            }
            const int faces = periodic ? n : n + 1;
            for (int f = 0; f < faces; ++f) {
                int L, R;
                face_cells(f, n, periodic, L, R);
                const double af = 0.5 * (al[L] + al[R]);
                const double daf = 0.5 * (dl[L] + dl[R]);
                const int u = af > 0.0 ? L : R;
                F[f] = af * rl[u] + daf * ql[u];
            }
            if (periodic) F[n] = F[0];
            for (int k = 0; k < n; ++k) rd[lines.at(l, k)] = rl[k] - lam * (F[k + 1] - F[k]);
        }
    }
}

void adjoint_sweep(Field& bar, const Field& q, const std::vector<double>& a, std::vector<double>& abar,
                   int axis, double dt, Boundary boundary) {
    const Grid& g = q.grid();
    check_axis(g, axis);
    check_same_grid(g, bar.grid(), "adjoint sweep");
    const Lines lines(g, axis);
    const int n = lines.n;
    const bool periodic = boundary == Boundary::periodic;
    const double lam = dt / g.spacing[axis];
    auto& bd = bar.data();
    const auto& qd = q.data();

#pragma omp parallel
    {
        std::vector<double> ql(n), ol(n), al(n), rb(n), ab(n), Fb(n + 1);
#pragma omp for schedule(static)
        for (int l = 0; l < lines.count; ++l) {
            for (int k = 0; k < n; ++k) {
                const auto idx = lines.at(l, k);
                ql[k] = qd[idx];
                ol[k] = bd[idx];
                al[k] = a[idx];
                rb[k] = ol[k];
                ab[k] = 0.0;
            }
            // out[k] = r[k] - lam (F[k+1] - F[k])
            std::fill(Fb.begin(), Fb.end(), 0.0);
            for (int k = 0; k < n; ++k) {
                Fb[k + 1] -= lam * ol[k];
                Fb[k] += lam * ol[k];
            }
            if (periodic) Fb[0] += Fb[n];
            const int faces = periodic ? n : n + 1;
            for (int f = 0; f < faces; ++f) {
                int L, R;
                face_cells(f, n, periodic, L, R);
                const double af = 0.5 * (al[L] + al[R]);
                const int u = af > 0.0 ? L : R;
                rb[u] += af * Fb[f];
                const double half = 0.5 * ql[u] * Fb[f];
                ab[L] += half;
                ab[R] += half;
            }
            for (int k = 0; k < n; ++k) {
                const auto idx = lines.at(l, k);
                bd[idx] = rb[k];
                abar[idx] += ab[k];
            }
        }
    }
}

double courant_number(const VectorField& w, double dt) {
    double c = 0.0;
    for (int axis = 0; axis < w.grid.dim; ++axis) {
        double m = 0.0;
        for (double v : w.component(axis)) m = std::max(m, std::abs(v));
        c = std::max(c, dt * m / w.grid.spacing[axis]);
    }
    return c;
}

} // namespace nlflow
