// Nonlocal velocity laws V(rho): evaluation, Frechet derivative DV(rho)(r),
// its transpose, and the structural flags / constants used by the audits.
#pragma once

#include "nlflow/grid.hpp"

#include <memory>
#include <string>
#include <vector>

namespace nlflow {

struct ModelFlags {
    bool divergence_free = false;
    bool satisfies_A = false; ///< div V(rho) >= 0 for every admissible rho
    bool satisfies_B = false; ///< C(alpha) bounded uniformly in alpha
};

/// V and DV frozen around one density. Built once per time step and shared
/// by the tangent and adjoint sweeps.
class Linearization {
public:
    virtual ~Linearization() = default;

    const VectorField& velocity() const { return w_; }
    virtual VectorField apply(const Field& r) const = 0;
    /// Adjoint of apply() for the volume-weighted inner products.
    virtual Field apply_transpose(const VectorField& wbar) const = 0;

protected:
    VectorField w_;
};

class VelocityModel {
public:
    virtual ~VelocityModel() = default;

    virtual std::string name() const = 0;
    virtual int dim() const = 0;
    virtual VectorField velocity(const Field& rho) const = 0;
    virtual std::unique_ptr<Linearization> linearize(const Field& rho) const = 0;
    virtual Field divergence(const Field& rho, Boundary boundary) const;
    virtual ModelFlags flags() const = 0;
    /// C(alpha): bounds |grad V|, and the L-infinity / L1 Lipschitz constant of V, for |rho| <= alpha.
    virtual double lipschitz_scale(double alpha) const = 0;
    /// K(alpha): bounds |DV(rho)(r)| in W^{1,inf} per unit |r|_1, plus the quadratic remainder.
    virtual double derivative_scale(double alpha) const = 0;

    VectorField velocity_derivative(const Field& rho, const Field& r) const;
    Field velocity_derivative_transpose(const Field& rho, const VectorField& wbar) const;
};

/// Discrete (centred) divergence of V(rho); exactly zero for spatially constant laws.
Field divergence_of_V(const VelocityModel& model, const Field& rho, Boundary boundary = Boundary::outflow);

// ---------------------------------------------------------------- supply chain

struct SupplyChainParams {
    double vmax = 1.0;
    double window_lo = 0.0;
    double window_hi = 1.0;
};

/// V(rho) = vmax / (1 + U), U the integral of rho over the load window.
class SupplyChainModel final : public VelocityModel {
public:
    explicit SupplyChainModel(SupplyChainParams p);

    std::string name() const override { return "supply_chain"; }
    int dim() const override { return 1; }
    VectorField velocity(const Field& rho) const override;
    std::unique_ptr<Linearization> linearize(const Field& rho) const override;
    Field divergence(const Field& rho, Boundary boundary) const override;
    ModelFlags flags() const override { return {true, true, true}; }
    double lipschitz_scale(double) const override { return p_.vmax; }
    double derivative_scale(double) const override { return p_.vmax; }

    const SupplyChainParams& params() const { return p_; }
    /// Fraction of each cell covered by the load window.
    std::vector<double> window_weights(const Grid& g) const;
    double load(const Field& rho) const;

private:
    void check(const Field& rho) const;
    SupplyChainParams p_;
};

// ---------------------------------------------------------------- pedestrian

/// eta(x) proportional to (1 - |x/R|^2)^3 on |x| < R, sampled on the grid
/// stencil and renormalised to unit discrete mass.
class MollifierKernel {
public:
    MollifierKernel() = default;
    MollifierKernel(const Grid& grid, double radius);

    double radius() const { return radius_; }
    int half_width(int axis) const { return half_[axis]; }
    double weight(int di, int dj = 0) const;
    const Grid& grid() const { return grid_; }

    /// Discrete sum of weights * cell volume (1 up to roundoff).
    double mass() const;
    double linf() const { return linf_; }
    double grad_l1() const { return grad_l1_; }
    double grad_linf() const { return grad_linf_; }

    /// out = in * eta with zero padding; the stencil is symmetric, so this is also its own transpose.
    void convolve(std::span<const double> in, std::span<double> out) const;
    Field convolve(const Field& f) const;

private:
    struct Tap {
        int di;
        double wv; // weight times cell volume
    };
    Grid grid_;
    double radius_ = 0.0;
    std::array<int, 2> half_{0, 0};
    std::vector<double> weights_;
    std::vector<std::vector<Tap>> rows_; // nonzero taps per row offset dj
    double linf_ = 0.0;
    double grad_l1_ = 0.0;
    double grad_linf_ = 0.0;
};

struct SpeedLaw {
    enum class Kind { clamped, affine };
    Kind kind = Kind::clamped;
    double vmax = 1.0;
    double cap = 1.0;

    double value(double s) const;
    double slope(double s) const;
    /// sup |v| over s in [0, alpha].
    double max_value(double alpha) const;
    double max_slope() const { return vmax / cap; }
};

std::string to_string(SpeedLaw::Kind k);
SpeedLaw::Kind speed_law_from_string(const std::string& name);

/// Constant unit direction (cos angle, sin angle).
VectorField uniform_direction(const Grid& grid, double angle);
/// Unit vectors pointing at `exit`; converging when the exit lies outside the domain.
VectorField corridor_to_exit(const Grid& grid, const Point& exit);
/// Rows `x,y,vx,vy` assigned to the nearest cell, then normalised; every cell must be covered.
VectorField direction_from_csv(const std::string& path, const Grid& grid);

struct PedestrianParams {
    SpeedLaw law;
    double kernel_radius = 0.1;
    VectorField direction;
};

/// V(rho) = v(rho * eta) d, with d a unit direction field.
class PedestrianModel final : public VelocityModel {
public:
    PedestrianModel(const Grid& grid, PedestrianParams p);

    std::string name() const override { return "pedestrian"; }
    int dim() const override { return 2; }
    VectorField velocity(const Field& rho) const override;
    std::unique_ptr<Linearization> linearize(const Field& rho) const override;
    ModelFlags flags() const override { return {false, false, false}; }
    double lipschitz_scale(double alpha) const override;
    double derivative_scale(double alpha) const override;

    const MollifierKernel& kernel() const { return kernel_; }
    const PedestrianParams& params() const { return p_; }
    double direction_gradient_linf() const { return dir_grad_; }

private:
    void check(const Field& rho) const;
    Grid grid_;
    PedestrianParams p_;
    MollifierKernel kernel_;
    double dir_grad_ = 0.0;
};

// ---------------------------------------------------------------- frozen

/// V(rho) = w for every rho (DV = 0): linear transport with a prescribed field.
class FrozenVelocityModel final : public VelocityModel {
public:
    explicit FrozenVelocityModel(VectorField w, Boundary boundary = Boundary::outflow);

    std::string name() const override { return "frozen"; }
    int dim() const override { return w_.grid.dim; }
    VectorField velocity(const Field& rho) const override;
    std::unique_ptr<Linearization> linearize(const Field& rho) const override;
    ModelFlags flags() const override { return flags_; }
    double lipschitz_scale(double) const override { return grad_; }
    double derivative_scale(double) const override { return 0.0; }

private:
    VectorField w_;
    ModelFlags flags_;
    double grad_ = 0.0;
};

} // namespace nlflow
