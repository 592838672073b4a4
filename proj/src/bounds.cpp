#include "nlflow/bounds.hpp"

#include "nlflow/errors.hpp"
#include "nlflow/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace nlflow {

double wallis(int N) {
    require(N >= 0, "wallis needs N >= 0");
    double even = std::numbers::pi / 2.0;
    double odd = 1.0;
    if (N == 0) return even;
    if (N == 1) return odd;
    double w = N % 2 == 0 ? even : odd;
    for (int k = N % 2 == 0 ? 2 : 3; k <= N; k += 2) w = w * (k - 1) / k;
    return w;
}

KappaConstants kappa_constants(double grad_w_inf, int N) {
    require(grad_w_inf >= 0.0, "gradient norm must be nonnegative");
    require(N >= 1, "dimension must be >= 1");
    KappaConstants k;
    k.kappa = 2.0 * N * grad_w_inf;
    k.kappa0 = N * wallis(N) * (2.0 * N + 1.0) * grad_w_inf;
    if (grad_w_inf > 0.0 && k.kappa0 < k.kappa * 3.0 * std::numbers::pi / 8.0 * (1.0 - 1e-15)) {
        throw std::logic_error("kappa0 / kappa fell below 3 pi / 8");
    }
    return k;
}

void BoundsReport::add(const std::string& name, double theoretical, double measured, double slack,
                       const std::string& note) {
    BoundEntry e;
    e.name = name;
    e.theoretical = theoretical;
    e.measured = measured;
    e.slack = slack;
    const double allowed = theoretical >= 0.0 ? theoretical * (1.0 + slack) : theoretical * (1.0 - slack);
    e.satisfied = std::isfinite(measured) && measured <= allowed;
    e.margin = allowed - measured;
    e.note = note;
    entries.push_back(std::move(e));
}

bool BoundsReport::all_satisfied() const {
    return std::all_of(entries.begin(), entries.end(), [](const BoundEntry& e) { return e.satisfied; });
}

const BoundEntry* BoundsReport::find(const std::string& name) const {
    for (const auto& e : entries) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

std::string BoundsReport::to_json() const {
    nlohmann::ordered_json j;
    j["provenance"] = provenance;
    j["all_satisfied"] = all_satisfied();
    j["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : entries) {
        nlohmann::ordered_json o;
        o["name"] = e.name;
        o["theoretical"] = e.theoretical;
        o["measured"] = e.measured;
        o["slack"] = e.slack;
        o["satisfied"] = e.satisfied;
        o["margin"] = e.margin;
        if (!e.note.empty()) o["note"] = e.note;
        j["entries"].push_back(o);
    }
    j["warnings"] = warnings;
    return j.dump(2);
}

std::string BoundsReport::table() const {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-22s %14s %14s %9s  %s\n", "entry", "theoretical", "measured", "slack",
                  "status");
    out << line;
    for (const auto& e : entries) {
        std::snprintf(line, sizeof line, "%-22s %14.6e %14.6e %9.1e  %s\n", e.name.c_str(), e.theoretical,
                      e.measured, e.slack, e.satisfied ? "ok" : "VIOLATED");
        out << line;
    }
    for (const auto& w : warnings) out << "warning: " << w << "\n";
    return out.str();
}

double lipschitz_envelope(const VelocityModel& model, int N, double beta, double tv_max, double t) {
    return std::exp(t * model.lipschitz_scale(beta) * (2.0 * N + tv_max + N * beta));
}

double lipschitz_study(const Field& rho1, const Field& rho2, const VelocityModel& model, double t,
                       const SolverConfig& cfg) {
    check_same_grid(rho1.grid(), rho2.grid(), "lipschitz study");
    const double d0 = norm_l1(rho1 - rho2);
    if (d0 == 0.0) return 1.0;
    SolverConfig c = cfg;
    c.t_end = t;
    c.record_every = 1 << 30;
    const Trajectory a = solve(rho1, model, c);
    const Trajectory b = solve(rho2, model, c);
    return norm_l1(a.final_state() - b.final_state()) / d0;
}

namespace {

// Worst checkpoint of measured / bound, returned as the (bound, measured) pair.
struct Worst {
    double bound = 0.0;
    double measured = 0.0;
    double ratio = -1.0;
    void offer(double b, double m) {
        const double r = b > 0.0 ? m / b : (m > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (r > ratio) {
            ratio = r;
            bound = b;
            measured = m;
        }
    }
};

Field perturbation(const Field& rho, double size, std::uint64_t seed) {
    const CounterRng rng(seed, 0x1195);
    Field r(rho.grid());
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = size * rng.uniform(k, -1.0, 1.0) * rho[k];
    return r;
}

} // namespace

BoundsReport audit_run(const Trajectory& base, const VelocityModel& model, const AuditOptions& opt) {
    require(!base.states.empty() && !base.velocities.empty(), "audit needs a recorded trajectory");
    BoundsReport rep;
    rep.provenance = opt.provenance;
    const int N = base.grid.dim;
    const Field& rho_o = base.initial();
    const double linf0 = norm_linf(rho_o);
    const double tv0 = total_variation(rho_o);
    const double w110 = discrete_w11(rho_o);

    double beta = 0.0;
    double tv_max = 0.0;
    double grad_w = 0.0;
    for (std::size_t c = 0; c < base.states.size(); ++c) {
        beta = std::max(beta, norm_linf(base.states[c]));
        tv_max = std::max(tv_max, total_variation(base.states[c]));
        grad_w = std::max(grad_w, gradient_linf(base.velocities[c], base.boundary));
    }
    const double C = model.lipschitz_scale(beta);

    {
        Worst w;
        for (std::size_t c = 0; c < base.states.size(); ++c) w.offer(base.linf_bound[c], norm_linf(base.states[c]));
        rep.add("linf_growth", w.bound, w.measured, N == 1 ? kExactSlack : kMeasuredSlack,
                "|rho_o|_inf exp(t max|div w|_inf), worst checkpoint");
    }
    if (model.flags().satisfies_A) {
        rep.add("invariance", linf0, beta, 1e-12, "div V >= 0 keeps |rho|_inf <= |rho_o|_inf");
    }
    {
        const double L = kappa_constants(C, N).kappa0;
        Worst w;
        for (std::size_t c = 0; c < base.states.size(); ++c) {
            const double t = base.times[c];
            w.offer((tv0 + L * t * linf0) * std::exp(L * t), total_variation(base.states[c]));
        }
        std::ostringstream note;
        note << "L = N W_N (2N+1) C(beta) = " << L << ", beta = " << beta;
        rep.add("total_variation", w.bound, w.measured, kMeasuredSlack, note.str());
    }
    {
        Worst w;
        for (std::size_t c = 0; c < base.states.size(); ++c) {
            w.offer(std::exp(2.0 * C * base.times[c]) * w110, discrete_w11(base.states[c]));
        }
        rep.add("w11_regularity", w.bound, w.measured, kMeasuredSlack, "exp(2 C t) |rho_o|_W11");
    }
    {
        const KappaConstants k = kappa_constants(grad_w, N);
        const double ratio = k.kappa > 0.0 ? k.kappa0 / k.kappa : wallis(N) * (2.0 * N + 1.0) / 2.0;
        rep.add("kappa0_over_kappa", ratio, 3.0 * std::numbers::pi / 8.0, 0.0,
                "theoretical column holds kappa0/kappa, measured column the lower bound 3 pi/8");
    }

    const Field r_o = perturbation(rho_o, opt.perturbation, opt.seed);
    if (opt.lipschitz) {
        SolverConfig cfg;
        cfg.cfl = opt.cfl;
        cfg.t_end = base.t_end();
        cfg.boundary = base.boundary;
        cfg.flux = base.flux;
        cfg.cfl_limit = base.cfl_limit;
        if (cfg.t_end > 0.0) {
            const Field rho2 = rho_o + r_o;
            const double ratio = lipschitz_study(rho_o, rho2, model, cfg.t_end, cfg);
            const double beta2 = std::max(beta, norm_linf(rho2));
            const double env = lipschitz_envelope(model, N, beta2, std::max(tv_max, total_variation(rho2)), cfg.t_end);
            rep.add("lipschitz", env, ratio, kMeasuredSlack, "exp(t C(beta) (2N + TV_max + N beta))");
        }
    }
    if (opt.tangent) {
        if (base.flux != Flux::upwind) {
            rep.warnings.push_back("tangent audit skipped: the tangent solver supports the upwind flux only");
        } else {
            const TangentSolution tan = tangent_solve(r_o, base, model);
            Worst w;
            for (std::size_t c = 0; c < base.states.size(); ++c) {
                w.offer(tangent_l1_bound(r_o, base, model, base.times[c]), norm_l1(tan.states[c]));
            }
            rep.add("tangent_l1", w.bound, w.measured, kMeasuredSlack,
                    "exp(K t max|rho|_W11) exp(C t) |r_o|_1, worst checkpoint");
        }
    }

    const double m0 = std::abs(mass(rho_o));
    if (std::abs(base.boundary_outflow) > 1e-14 * std::max(1.0, m0)) {
        std::ostringstream msg;
        msg << "nonzero boundary flux: " << base.boundary_outflow << " mass left through outflow faces";
        rep.warnings.push_back(msg.str());
    }
    if (base.beyond_existence_horizon) {
        std::ostringstream msg;
        msg << "run extends past the estimated existence horizon " << base.existence_horizon;
        rep.warnings.push_back(msg.str());
    }
    return rep;
}

double fitted_order(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < x.size() && k < y.size(); ++k) {
        if (!(x[k] > 0.0 && y[k] > 0.0)) continue;
        const double lx = std::log(x[k]);
        const double ly = std::log(y[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return 0.0;
    const double den = n * sxx - sx * sx;
    return den == 0.0 ? 0.0 : (n * sxy - sx * sy) / den;
}

GateauxStudy gateaux_study(const Field& rho_o, const Field& r_o, const VelocityModel& model,
                           const SolverConfig& cfg, const std::vector<double>& h_ladder) {
    require(!h_ladder.empty(), "h ladder is empty");
    for (std::size_t k = 0; k < h_ladder.size(); ++k) {
        require(h_ladder[k] > 0.0, "h ladder entries must be positive");
        if (k > 0) require(h_ladder[k] < h_ladder[k - 1], "h ladder must be decreasing");
    }
    SolverConfig c = cfg;
    c.record_every = 1 << 30;
    const Trajectory base = solve(rho_o, model, c);
    const Field rT = tangent_solve(r_o, base, model).final_state();
    GateauxStudy out;
    std::vector<double> hs, es;
    for (double h : h_ladder) {
        const Trajectory pert = solve_on_schedule(combine(1.0, rho_o, h, r_o), model, c, base.dt_sequence);
        Field q = combine(1.0 / h, pert.final_state(), -1.0 / h, base.final_state());
        q -= rT;
        GateauxRow row;
        row.h = h;
        row.l1_error = norm_l1(q);
        if (!out.rows.empty() && out.rows.back().l1_error > 0.0 && row.l1_error > 0.0) {
            row.observed_order = std::log(out.rows.back().l1_error / row.l1_error) / std::log(out.rows.back().h / h);
        }
        out.rows.push_back(row);
        hs.push_back(h);
        es.push_back(row.l1_error);
    }
    out.slope = fitted_order(hs, es);
    return out;
}

} // namespace nlflow
