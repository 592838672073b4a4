// Uniform Cartesian grids in one and two dimensions, cell-average fields on
// them, and the discrete norms used by the solvers and the audits.
#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nlflow {

using Point = std::array<double, 2>;

enum class Boundary { outflow, periodic };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& name);

struct Grid {
    int dim = 1;
    Point origin{0.0, 0.0};
    Point extents{1.0, 1.0};
    std::array<int, 2> cells{2, 1};
    Point spacing{0.5, 1.0};

    static Grid line(double x0, double length, int n);
    static Grid plane(Point origin, Point extents, std::array<int, 2> cells);

    std::size_t size() const { return static_cast<std::size_t>(cells[0]) * cells[1]; }
    double cell_volume() const { return dim == 1 ? spacing[0] : spacing[0] * spacing[1]; }
    double min_spacing() const;

    /// Row-major index, x fastest.
    std::size_t index(int i, int j = 0) const {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(cells[0]) * j;
    }
    double center(int axis, int k) const { return origin[axis] + (k + 0.5) * spacing[axis]; }
    Point center_of(std::size_t idx) const;
    Point upper() const { return {origin[0] + extents[0], origin[1] + extents[1]}; }
    bool contains(const Point& p) const;

    friend bool operator==(const Grid&, const Grid&) = default;
};

class Field {
public:
    Field() = default;
    explicit Field(const Grid& grid, double value = 0.0);
    Field(const Grid& grid, std::vector<double> values);

    static Field from_function(const Grid& grid, const std::function<double(const Point&)>& f);

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    std::vector<double>& data() { return values_; }
    const std::vector<double>& data() const { return values_; }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double at(int i, int j = 0) const { return values_[grid_.index(i, j)]; }

    bool all_finite() const;

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator*=(double s);

private:
    Grid grid_;
    std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// a*f + b*g on a common grid.
Field combine(double a, const Field& f, double b, const Field& g);

/// Cell-centred vector field; `y` is empty on 1-D grids.
struct VectorField {
    Grid grid;
    std::vector<double> x;
    std::vector<double> y;

    VectorField() = default;
    explicit VectorField(const Grid& g);

    std::vector<double>& component(int axis) { return axis == 0 ? x : y; }
    const std::vector<double>& component(int axis) const { return axis == 0 ? x : y; }
    /// Largest |component| over all axes and cells.
    double max_abs_component() const;
    bool all_finite() const;
};

void check_same_grid(const Grid& a, const Grid& b, const char* what);

double norm_l1(const Field& f);
double norm_l2(const Field& f);
double norm_linf(const Field& f);
double mass(const Field& f);
/// Volume-weighted L2 inner product.
double inner(const Field& f, const Field& g);
/// Anisotropic (axis-summed) total variation; out-of-domain neighbours copy the boundary cell.
double total_variation(const Field& f);
/// L1 norm plus L1 norm of the one-sided difference quotients.
double discrete_w11(const Field& f);

/// Centred divergence (w[k+1] - w[k-1]) / 2h, i.e. the difference of face-averaged
/// velocities used by the transport scheme.
Field discrete_divergence(const VectorField& w, Boundary boundary);
/// max over cells of the Frobenius norm of the centred velocity gradient.
double gradient_linf(const VectorField& w, Boundary boundary);

/// Bilinear (linear in 1-D) interpolation of cell-centre samples, zero outside the domain.
double interpolate(const Field& f, const Point& p);
double interpolate(const Grid& grid, std::span<const double> values, const Point& p);

/// CSV with header `x[,y],value`, one row per cell, 17 significant digits.
void write_field_csv(std::ostream& out, const Field& f);
void write_field_csv(const std::string& path, const Field& f);
/// Reads `x[,y],value` rows and assigns each to the nearest cell; unlisted cells are zero.
Field read_field_csv(const std::string& path, const Grid& grid);

} // namespace nlflow
