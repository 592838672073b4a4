#include "nlflow/models.hpp"

#include "nlflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace nlflow {

Field VelocityModel::divergence(const Field& rho, Boundary boundary) const {
    return discrete_divergence(velocity(rho), boundary);
}

VectorField VelocityModel::velocity_derivative(const Field& rho, const Field& r) const {
    check_same_grid(rho.grid(), r.grid(), "velocity derivative");
    return linearize(rho)->apply(r);
}

Field VelocityModel::velocity_derivative_transpose(const Field& rho, const VectorField& wbar) const {
    check_same_grid(rho.grid(), wbar.grid, "velocity derivative transpose");
    return linearize(rho)->apply_transpose(wbar);
}

Field divergence_of_V(const VelocityModel& model, const Field& rho, Boundary boundary) {
    return model.divergence(rho, boundary);
}

// ---------------------------------------------------------------- supply chain

namespace {

class SupplyChainLinearization final : public Linearization {
public:
    SupplyChainLinearization(const Grid& g, std::vector<double> weights, double slope, double speed)
        : weights_(std::move(weights)), slope_(slope) {
        w_ = VectorField(g);
        std::fill(w_.x.begin(), w_.x.end(), speed);
    }

    VectorField apply(const Field& r) const override {
        check_same_grid(w_.grid, r.grid(), "supply chain DV");
        double ir = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) ir += weights_[k] * r[k];
        ir *= w_.grid.spacing[0];
        VectorField out(w_.grid);
        std::fill(out.x.begin(), out.x.end(), slope_ * ir);
        return out;
    }

    // DV is rank one: its transpose scatters the summed cotangent onto the window.
    Field apply_transpose(const VectorField& wbar) const override {
        check_same_grid(w_.grid, wbar.grid, "supply chain DV transpose");
        double s = 0.0;
        for (double v : wbar.x) s += v;
        const double scale = slope_ * s * w_.grid.spacing[0];
        Field out(w_.grid);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = scale * weights_[k];
        return out;
    }

private:
    std::vector<double> weights_;
    double slope_;
};

} // namespace

SupplyChainModel::SupplyChainModel(SupplyChainParams p) : p_(p) {
    require(p_.vmax > 0.0 && std::isfinite(p_.vmax), "supply chain vmax must be positive");
    require(p_.window_hi > p_.window_lo, "supply chain load window must be nonempty");
}

void SupplyChainModel::check(const Field& rho) const {
    if (rho.grid().dim != 1) throw ConfigError("supply chain model requires a 1-D field");
}

std::vector<double> SupplyChainModel::window_weights(const Grid& g) const {
    std::vector<double> w(g.size(), 0.0);
    for (int i = 0; i < g.cells[0]; ++i) {
        const double a = g.origin[0] + i * g.spacing[0];
        const double b = a + g.spacing[0];
        const double overlap = std::min(b, p_.window_hi) - std::max(a, p_.window_lo);
        if (overlap > 0.0) w[i] = std::min(1.0, overlap / g.spacing[0]);
    }
    return w;
}

double SupplyChainModel::load(const Field& rho) const {
    check(rho);
    const auto w = window_weights(rho.grid());
    double u = 0.0;
    for (std::size_t k = 0; k < rho.size(); ++k) u += w[k] * rho[k];
    return u * rho.grid().spacing[0];
}

VectorField SupplyChainModel::velocity(const Field& rho) const {
    const double u = load(rho);
    if (!(1.0 + u > 0.0)) throw NumericalError("supply chain load fell to or below -1");
    VectorField w(rho.grid());
    std::fill(w.x.begin(), w.x.end(), p_.vmax / (1.0 + u));
    return w;
}

std::unique_ptr<Linearization> SupplyChainModel::linearize(const Field& rho) const {
    const double u = load(rho);
    if (!(1.0 + u > 0.0)) throw NumericalError("supply chain load fell to or below -1");
    const double speed = p_.vmax / (1.0 + u);
    const double slope = -p_.vmax / ((1.0 + u) * (1.0 + u));
    return std::make_unique<SupplyChainLinearization>(rho.grid(), window_weights(rho.grid()), slope, speed);
}

Field SupplyChainModel::divergence(const Field& rho, Boundary) const {
    check(rho);
    return Field(rho.grid(), 0.0);
}

// ---------------------------------------------------------------- kernel

namespace {

double bump_profile(double q) { // q = |x/R|^2
    if (q >= 1.0) return 0.0;
    const double s = 1.0 - q;
    return s * s * s;
}

} // namespace

MollifierKernel::MollifierKernel(const Grid& grid, double radius) : grid_(grid), radius_(radius) {
    require(radius > 0.0 && std::isfinite(radius), "kernel radius must be positive");
    for (int a = 0; a < grid.dim; ++a) {
        require(radius >= 2.0 * grid.spacing[a] * (1.0 - 1e-12),
                "kernel radius " + std::to_string(radius) + " is under-resolved (needs >= 2 grid spacings)");
        half_[a] = static_cast<int>(std::floor(radius / grid.spacing[a]));
    }
    const int wx = 2 * half_[0] + 1;
    const int wy = 2 * half_[1] + 1;
    weights_.assign(static_cast<std::size_t>(wx) * wy, 0.0);
    const double r2 = radius * radius;
    double total = 0.0;
    for (int dj = -half_[1]; dj <= half_[1]; ++dj) {
        for (int di = -half_[0]; di <= half_[0]; ++di) {
            const double x = di * grid.spacing[0];
            const double y = grid.dim == 2 ? dj * grid.spacing[1] : 0.0;
            const double v = bump_profile((x * x + y * y) / r2);
            weights_[(dj + half_[1]) * wx + (di + half_[0])] = v;
            total += v;
        }
    }
    const double vol = grid.cell_volume();
    const double c = 1.0 / (total * vol);
    for (auto& v : weights_) v *= c;

    rows_.assign(wy, {});
    for (int dj = -half_[1]; dj <= half_[1]; ++dj) {
        for (int di = -half_[0]; di <= half_[0]; ++di) {
            const double v = weights_[(dj + half_[1]) * wx + (di + half_[0])];
            if (v > 0.0) rows_[dj + half_[1]].push_back({di, v * vol});
        }
    }

    // |grad eta|(d) = c * 6 (d / R^2) (1 - d^2/R^2)^2, maximal at d^2 = R^2 / 5.
    linf_ = *std::max_element(weights_.begin(), weights_.end());
    grad_linf_ = c * 6.0 / radius / std::sqrt(5.0) * (16.0 / 25.0);
    grad_l1_ = 0.0;
    for (int dj = -half_[1]; dj <= half_[1]; ++dj) {
        for (int di = -half_[0]; di <= half_[0]; ++di) {
            const double x = di * grid.spacing[0];
            const double y = grid.dim == 2 ? dj * grid.spacing[1] : 0.0;
            const double d = std::sqrt(x * x + y * y);
            if (d >= radius) continue;
            const double s = 1.0 - d * d / r2;
            grad_l1_ += c * 6.0 * d / r2 * s * s * vol;
        }
    }
}

double MollifierKernel::weight(int di, int dj) const {
    if (std::abs(di) > half_[0] || std::abs(dj) > half_[1]) return 0.0;
    return weights_[(dj + half_[1]) * (2 * half_[0] + 1) + (di + half_[0])];
}

double MollifierKernel::mass() const {
    double s = 0.0;
    for (double v : weights_) s += v;
    return s * grid_.cell_volume();
}

void MollifierKernel::convolve(std::span<const double> in, std::span<double> out) const {
    const int nx = grid_.cells[0];
    const int ny = grid_.cells[1];
    const int hy = half_[1];
#pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j) {
        double* dst = out.data() + static_cast<std::size_t>(j) * nx;
        std::fill(dst, dst + nx, 0.0);
        for (int dj = -hy; dj <= hy; ++dj) {
            const int jj = j + dj;
            if (jj < 0 || jj >= ny) continue;
            const double* src = in.data() + static_cast<std::size_t>(jj) * nx;
            for (const Tap& t : rows_[dj + hy]) {
                const int lo = std::max(0, -t.di);
                const int hi = std::min(nx, nx - t.di);
                const double* s = src + t.di;
                const double wv = t.wv;
                for (int i = lo; i < hi; ++i) dst[i] += wv * s[i];
            }
        }
    }
}

Field MollifierKernel::convolve(const Field& f) const {
    check_same_grid(grid_, f.grid(), "kernel convolution");
    Field out(grid_);
    convolve(f.values(), out.data());
    return out;
}

// ---------------------------------------------------------------- speed law

double SpeedLaw::value(double s) const {
    const double v = vmax * (1.0 - s / cap);
    return kind == Kind::clamped ? std::max(0.0, v) : v;
}

double SpeedLaw::slope(double s) const {
    if (kind == Kind::clamped && s >= cap) return 0.0;
    return -vmax / cap;
}

double SpeedLaw::max_value(double alpha) const {
    return std::max(std::abs(value(0.0)), std::abs(value(alpha)));
}

std::string to_string(SpeedLaw::Kind k) { return k == SpeedLaw::Kind::affine ? "affine" : "clamped"; }

SpeedLaw::Kind speed_law_from_string(const std::string& name) {
    if (name == "clamped") return SpeedLaw::Kind::clamped;
    if (name == "affine") return SpeedLaw::Kind::affine;
    throw ConfigError("unknown speed law '" + name + "'");
}

// ---------------------------------------------------------------- directions

VectorField uniform_direction(const Grid& grid, double angle) {
    require(grid.dim == 2, "direction fields are 2-D");
    VectorField d(grid);
    std::fill(d.x.begin(), d.x.end(), std::cos(angle));
    std::fill(d.y.begin(), d.y.end(), std::sin(angle));
    return d;
}

VectorField corridor_to_exit(const Grid& grid, const Point& exit) {
    require(grid.dim == 2, "direction fields are 2-D");
    VectorField d(grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Point c = grid.center_of(k);
        const double dx = exit[0] - c[0];
        const double dy = exit[1] - c[1];
        const double n = std::hypot(dx, dy);
        require(n > 0.0, "exit point coincides with a cell centre");
        d.x[k] = dx / n;
        d.y[k] = dy / n;
    }
    return d;
}

VectorField direction_from_csv(const std::string& path, const Grid& grid) {
    require(grid.dim == 2, "direction fields are 2-D");
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    VectorField d(grid);
    std::vector<char> seen(grid.size(), 0);
    std::string line;
    std::getline(in, line);
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<double> cols;
        std::string cell;
        while (std::getline(ss, cell, ',')) cols.push_back(std::stod(cell));
        if (cols.size() != 4) throw ConfigError(path + ": row " + std::to_string(row) + " needs x,y,vx,vy");
        int i = static_cast<int>(std::floor((cols[0] - grid.origin[0]) / grid.spacing[0]));
        int j = static_cast<int>(std::floor((cols[1] - grid.origin[1]) / grid.spacing[1]));
        i = std::clamp(i, 0, grid.cells[0] - 1);
        j = std::clamp(j, 0, grid.cells[1] - 1);
        const auto k = grid.index(i, j);
        d.x[k] = cols[2];
        d.y[k] = cols[3];
        seen[k] = 1;
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double n = std::hypot(d.x[k], d.y[k]);
        if (!seen[k] || !(n > 0.0)) {
            throw ConfigError(path + ": no usable direction for cell " + std::to_string(k));
        }
        d.x[k] /= n;
        d.y[k] /= n;
    }
    return d;
}

// ---------------------------------------------------------------- pedestrian

namespace {

class PedestrianLinearization final : public Linearization {
public:
    PedestrianLinearization(const MollifierKernel& kernel, const VectorField& dir, VectorField w,
                            std::vector<double> slope)
        : kernel_(kernel), dir_(dir), slope_(std::move(slope)) {
        w_ = std::move(w);
    }

    VectorField apply(const Field& r) const override {
        check_same_grid(w_.grid, r.grid(), "pedestrian DV");
        const Field c = kernel_.convolve(r);
        VectorField out(w_.grid);
        const std::size_t n = out.x.size();
#pragma omp parallel for schedule(static)
        for (std::size_t k = 0; k < n; ++k) {
            const double s = slope_[k] * c[k];
            out.x[k] = s * dir_.x[k];
            out.y[k] = s * dir_.y[k];
        }
        return out;
    }

    Field apply_transpose(const VectorField& wbar) const override {
        check_same_grid(w_.grid, wbar.grid, "pedestrian DV transpose");
        Field z(w_.grid);
        const std::size_t n = z.size();
        for (std::size_t k = 0; k < n; ++k) z[k] = slope_[k] * (wbar.x[k] * dir_.x[k] + wbar.y[k] * dir_.y[k]);
        return kernel_.convolve(z);
    }

private:
    const MollifierKernel& kernel_;
    const VectorField& dir_;
    std::vector<double> slope_;
};

} // namespace

PedestrianModel::PedestrianModel(const Grid& grid, PedestrianParams p) : grid_(grid), p_(std::move(p)) {
    require(grid.dim == 2, "pedestrian model requires a 2-D grid");
    require(p_.law.vmax > 0.0 && p_.law.cap > 0.0, "speed law needs vmax > 0 and cap > 0");
    if (p_.direction.x.empty()) p_.direction = uniform_direction(grid, 0.0);
    check_same_grid(grid, p_.direction.grid, "direction field");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double n = std::hypot(p_.direction.x[k], p_.direction.y[k]);
        require(std::abs(n - 1.0) <= 1e-9, "direction field must have unit length in every cell");
    }
    kernel_ = MollifierKernel(grid, p_.kernel_radius);
    dir_grad_ = gradient_linf(p_.direction, Boundary::outflow);
}

void PedestrianModel::check(const Field& rho) const { check_same_grid(grid_, rho.grid(), "pedestrian model"); }

VectorField PedestrianModel::velocity(const Field& rho) const {
    check(rho);
    const Field s = kernel_.convolve(rho);
    VectorField w(grid_);
    const std::size_t n = w.x.size();
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < n; ++k) {
        const double v = p_.law.value(s[k]);
        w.x[k] = v * p_.direction.x[k];
        w.y[k] = v * p_.direction.y[k];
    }
    return w;
}

std::unique_ptr<Linearization> PedestrianModel::linearize(const Field& rho) const {
    check(rho);
    const Field s = kernel_.convolve(rho);
    VectorField w(grid_);
    std::vector<double> slope(grid_.size());
    const std::size_t n = w.x.size();
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < n; ++k) {
        const double v = p_.law.value(s[k]);
        w.x[k] = v * p_.direction.x[k];
        w.y[k] = v * p_.direction.y[k];
        slope[k] = p_.law.slope(s[k]);
    }
    return std::make_unique<PedestrianLinearization>(kernel_, p_.direction, std::move(w), std::move(slope));
}

// Product-rule bounds with discrete kernel norms and |d| = 1.
double PedestrianModel::lipschitz_scale(double alpha) const {
    const double dv = p_.law.max_slope();
    const double grad = dv * alpha * kernel_.grad_l1() + p_.law.max_value(alpha) * dir_grad_;
    const double nonlocal = dv * kernel_.linf();
    return std::max(grad, nonlocal);
}

double PedestrianModel::derivative_scale(double alpha) const {
    (void)alpha; // v'' vanishes away from the clamp corner
    const double dv = p_.law.max_slope();
    return dv * (kernel_.linf() + kernel_.grad_linf() + kernel_.linf() * dir_grad_);
}

// ---------------------------------------------------------------- frozen

namespace {

class FrozenLinearization final : public Linearization {
public:
    explicit FrozenLinearization(VectorField w) { w_ = std::move(w); }
    VectorField apply(const Field& r) const override {
        check_same_grid(w_.grid, r.grid(), "frozen DV");
        return VectorField(w_.grid);
    }
    Field apply_transpose(const VectorField& wbar) const override {
        check_same_grid(w_.grid, wbar.grid, "frozen DV transpose");
        return Field(w_.grid);
    }
};

} // namespace

FrozenVelocityModel::FrozenVelocityModel(VectorField w, Boundary boundary) : w_(std::move(w)) {
    require(w_.all_finite(), "frozen velocity must be finite");
    const Field div = discrete_divergence(w_, boundary);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : div.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    flags_.divergence_free = lo == 0.0 && hi == 0.0;
    flags_.satisfies_A = lo >= 0.0;
    flags_.satisfies_B = true;
    grad_ = gradient_linf(w_, boundary);
}

VectorField FrozenVelocityModel::velocity(const Field& rho) const {
    check_same_grid(w_.grid, rho.grid(), "frozen model");
    return w_;
}

std::unique_ptr<Linearization> FrozenVelocityModel::linearize(const Field& rho) const {
    check_same_grid(w_.grid, rho.grid(), "frozen model");
    return std::make_unique<FrozenLinearization>(w_);
}

} // namespace nlflow
