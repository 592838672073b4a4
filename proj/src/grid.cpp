#include "nlflow/grid.hpp"

#include "nlflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace nlflow {

std::string to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "outflow"; }

Boundary boundary_from_string(const std::string& name) {
    if (name == "periodic") return Boundary::periodic;
    if (name == "outflow") return Boundary::outflow;
    throw ConfigError("unknown boundary '" + name + "'");
}

Grid Grid::line(double x0, double length, int n) {
    require(n >= 2, "grid needs at least 2 cells per axis");
    require(length > 0.0 && std::isfinite(length), "grid extent must be positive");
    Grid g;
    g.dim = 1;
    g.origin = {x0, 0.0};
    g.extents = {length, 1.0};
    g.cells = {n, 1};
    g.spacing = {length / n, 1.0};
    return g;
}

Grid Grid::plane(Point origin, Point extents, std::array<int, 2> cells) {
    for (int a = 0; a < 2; ++a) {
        require(cells[a] >= 2, "grid needs at least 2 cells per axis");
        require(extents[a] > 0.0 && std::isfinite(extents[a]), "grid extent must be positive");
    }
    Grid g;
    g.dim = 2;
    g.origin = origin;
    g.extents = extents;
    g.cells = cells;
    g.spacing = {extents[0] / cells[0], extents[1] / cells[1]};
    return g;
}

double Grid::min_spacing() const { return dim == 1 ? spacing[0] : std::min(spacing[0], spacing[1]); }

Point Grid::center_of(std::size_t idx) const {
    const int i = static_cast<int>(idx % cells[0]);
    const int j = static_cast<int>(idx / cells[0]);
    return {center(0, i), dim == 2 ? center(1, j) : 0.0};
}

bool Grid::contains(const Point& p) const {
    for (int a = 0; a < dim; ++a) {
        if (!(p[a] >= origin[a] && p[a] <= origin[a] + extents[a])) return false;
    }
    return true;
}

Field::Field(const Grid& grid, double value) : grid_(grid), values_(grid.size(), value) {}

Field::Field(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    require(values_.size() == grid_.size(), "field length does not match the grid");
}

Field Field::from_function(const Grid& grid, const std::function<double(const Point&)>& f) {
    Field out(grid);
    for (std::size_t k = 0; k < out.size(); ++k) out.values_[k] = f(grid.center_of(k));
    return out;
}

bool Field::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Field& Field::operator+=(const Field& other) {
    check_same_grid(grid_, other.grid_, "field addition");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
    return *this;
}

Field& Field::operator-=(const Field& other) {
    check_same_grid(grid_, other.grid_, "field subtraction");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
    return *this;
}

Field& Field::operator*=(double s) {
    for (auto& v : values_) v *= s;
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

Field combine(double a, const Field& f, double b, const Field& g) {
    check_same_grid(f.grid(), g.grid(), "combine");
    Field out(f.grid());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = a * f[k] + b * g[k];
    return out;
}

VectorField::VectorField(const Grid& g) : grid(g), x(g.size(), 0.0) {
    if (g.dim == 2) y.assign(g.size(), 0.0);
}

double VectorField::max_abs_component() const {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    for (double v : y) m = std::max(m, std::abs(v));
    return m;
}

bool VectorField::all_finite() const {
    auto finite = [](double v) { return std::isfinite(v); };
    return std::all_of(x.begin(), x.end(), finite) && std::all_of(y.begin(), y.end(), finite);
}

void check_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (!(a == b)) throw ConfigError(std::string("grid mismatch in ") + what);
}

double norm_l1(const Field& f) {
    double s = 0.0;
    for (double v : f.values()) s += std::abs(v);
    return s * f.grid().cell_volume();
}

double norm_l2(const Field& f) { return std::sqrt(inner(f, f)); }

double norm_linf(const Field& f) {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    return m;
}

double mass(const Field& f) {
    double s = 0.0;
    for (double v : f.values()) s += v;
    return s * f.grid().cell_volume();
}

double inner(const Field& f, const Field& g) {
    check_same_grid(f.grid(), g.grid(), "inner product");
    double s = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * g[k];
    return s * f.grid().cell_volume();
}

namespace {

// Sum over axes of sum |f[k+e_a] - f[k]| * weight[a]; boundary copies contribute nothing.
double axis_difference_sum(const Field& f, const std::array<double, 2>& weight) {
    const Grid& g = f.grid();
    const int nx = g.cells[0];
    const int ny = g.cells[1];
    double sx = 0.0;
    double sy = 0.0;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) sx += std::abs(f.at(i + 1, j) - f.at(i, j));
    }
    if (g.dim == 2) {
        for (int j = 0; j + 1 < ny; ++j) {
            for (int i = 0; i < nx; ++i) sy += std::abs(f.at(i, j + 1) - f.at(i, j));
        }
    }
    return sx * weight[0] + sy * weight[1];
}

} // namespace

double total_variation(const Field& f) {
    const Grid& g = f.grid();
    if (g.dim == 1) return axis_difference_sum(f, {1.0, 0.0});
    return axis_difference_sum(f, {g.spacing[1], g.spacing[0]});
}

double discrete_w11(const Field& f) {
    const Grid& g = f.grid();
    const double vol = g.cell_volume();
    return norm_l1(f) + axis_difference_sum(f, {vol / g.spacing[0], vol / g.spacing[1]});
}

namespace {

int neighbour(int k, int n, Boundary b) {
    if (k < 0) return b == Boundary::periodic ? k + n : 0;
    if (k >= n) return b == Boundary::periodic ? k - n : n - 1;
    return k;
}

} // namespace

Field discrete_divergence(const VectorField& w, Boundary boundary) {
    const Grid& g = w.grid;
    Field div(g);
    const int nx = g.cells[0];
    const int ny = g.cells[1];
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            double d = (w.x[g.index(neighbour(i + 1, nx, boundary), j)] -
                        w.x[g.index(neighbour(i - 1, nx, boundary), j)]) /
                       (2.0 * g.spacing[0]);
            if (g.dim == 2) {
                d += (w.y[g.index(i, neighbour(j + 1, ny, boundary))] -
                      w.y[g.index(i, neighbour(j - 1, ny, boundary))]) /
                     (2.0 * g.spacing[1]);
            }
            div[g.index(i, j)] = d;
        }
    }
    return div;
}

double gradient_linf(const VectorField& w, Boundary boundary) {
    const Grid& g = w.grid;
    const int nx = g.cells[0];
    const int ny = g.cells[1];
    double m = 0.0;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            double frob = 0.0;
            for (int c = 0; c < g.dim; ++c) {
                const auto& comp = w.component(c);
                const double dx = (comp[g.index(neighbour(i + 1, nx, boundary), j)] -
                                   comp[g.index(neighbour(i - 1, nx, boundary), j)]) /
                                  (2.0 * g.spacing[0]);
                frob += dx * dx;
                if (g.dim == 2) {
                    const double dy = (comp[g.index(i, neighbour(j + 1, ny, boundary))] -
                                       comp[g.index(i, neighbour(j - 1, ny, boundary))]) /
                                      (2.0 * g.spacing[1]);
                    frob += dy * dy;
                }
            }
            m = std::max(m, std::sqrt(frob));
        }
    }
    return m;
}

double interpolate(const Grid& g, std::span<const double> values, const Point& p) {
    if (!g.contains(p)) return 0.0;
    std::array<int, 2> lo{0, 0};
    std::array<double, 2> frac{0.0, 0.0};
    for (int a = 0; a < g.dim; ++a) {
        const double u = (p[a] - g.origin[a]) / g.spacing[a] - 0.5;
        double fl = std::floor(u);
        int k = static_cast<int>(fl);
        double t = u - fl;
        if (k < 0) {
            k = 0;
            t = 0.0;
        } else if (k >= g.cells[a] - 1) {
            k = g.cells[a] - 2;
            t = 1.0;
        }
        lo[a] = k;
        frac[a] = t;
    }
    if (g.dim == 1) {
        return (1.0 - frac[0]) * values[lo[0]] + frac[0] * values[lo[0] + 1];
    }
    const double v00 = values[g.index(lo[0], lo[1])];
    const double v10 = values[g.index(lo[0] + 1, lo[1])];
    const double v01 = values[g.index(lo[0], lo[1] + 1)];
    const double v11 = values[g.index(lo[0] + 1, lo[1] + 1)];
    return (1.0 - frac[1]) * ((1.0 - frac[0]) * v00 + frac[0] * v10) +
           frac[1] * ((1.0 - frac[0]) * v01 + frac[0] * v11);
}

double interpolate(const Field& f, const Point& p) { return interpolate(f.grid(), f.values(), p); }

void write_field_csv(std::ostream& out, const Field& f) {
    const Grid& g = f.grid();
    out << (g.dim == 1 ? "x,value\n" : "x,y,value\n");
    char buf[96];
    for (std::size_t k = 0; k < f.size(); ++k) {
        const Point c = g.center_of(k);
        if (g.dim == 1) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", c[0], f[k]);
        } else {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", c[0], c[1], f[k]);
        }
        out << buf;
    }
}

void write_field_csv(const std::string& path, const Field& f) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    write_field_csv(out, f);
}

Field read_field_csv(const std::string& path, const Grid& grid) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    Field f(grid);
    std::string line;
    std::getline(in, line); // header
    const int ncols = grid.dim + 1;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<double> cols;
        std::string cell;
        while (std::getline(ss, cell, ',')) cols.push_back(std::stod(cell));
        if (static_cast<int>(cols.size()) != ncols) {
            throw ConfigError(path + ": row " + std::to_string(row) + " has wrong column count");
        }
        std::array<int, 2> idx{0, 0};
        for (int a = 0; a < grid.dim; ++a) {
            int k = static_cast<int>(std::floor((cols[a] - grid.origin[a]) / grid.spacing[a]));
            idx[a] = std::clamp(k, 0, grid.cells[a] - 1);
        }
        f[grid.index(idx[0], idx[1])] = cols[grid.dim];
    }
    return f;
}

} // namespace nlflow
