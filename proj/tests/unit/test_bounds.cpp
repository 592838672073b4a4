#include "doctest.h"
#include "helpers.hpp"

#include "nlflow/bounds.hpp"

#include "json.hpp"

#include <cmath>
#include <numbers>

using namespace nlflow;

namespace {

SolverConfig config(double t_end, int record_every = 1) {
    SolverConfig c;
    c.t_end = t_end;
    c.record_every = record_every;
    return c;
}

double simpson_cos_power(int N) {
    const int n = 2000;
    const double h = std::numbers::pi / 2 / n;
    double s = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double w = k == 0 || k == n ? 1.0 : (k % 2 ? 4.0 : 2.0);
        s += w * std::pow(std::cos(k * h), N);
    }
    return s * h / 3.0;
}

PedestrianModel corridor_model(const Grid& g) {
    PedestrianParams p;
    p.law.cap = 4.0;
    p.kernel_radius = 0.2;
    p.direction = corridor_to_exit(g, {5.0, 1.0});
    return PedestrianModel(g, std::move(p));
}

} // namespace

TEST_SUITE("bounds") {

TEST_CASE("Wallis integrals") {
    CHECK(wallis(0) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
    CHECK(wallis(1) == 1.0);
    CHECK(wallis(2) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-15));
    for (int N = 0; N <= 10; ++N) CHECK(wallis(N) == doctest::Approx(simpson_cos_power(N)).epsilon(1e-12));
    CHECK_THROWS(wallis(-1));
}

TEST_CASE("kappa constants") {
    const KappaConstants a = kappa_constants(1.0, 1);
    CHECK(a.kappa == 2.0);
    CHECK(a.kappa0 == 3.0);
    const KappaConstants z = kappa_constants(0.0, 3);
    CHECK(z.kappa == 0.0);
    CHECK(z.kappa0 == 0.0);
    const KappaConstants b = kappa_constants(1.0, 2);
    CHECK(b.kappa == 4.0);
    CHECK(b.kappa0 == doctest::Approx(5.0 * std::numbers::pi / 2.0).epsilon(1e-15));
    for (int N = 1; N <= 10; ++N) {
        const KappaConstants k = kappa_constants(0.7, N);
        CHECK(k.kappa0 / k.kappa >= 3.0 * std::numbers::pi / 8.0);
    }
}

TEST_CASE("supply-chain audit") {
    const Grid g = Grid::line(-1.0, 2.5, 300);
    const SupplyChainModel m({1.0, 0.0, 1.0});
    const Trajectory base = solve(testing::bump(g, {0.0, 0.0}, 0.4), m, config(0.6, 5));
    const BoundsReport rep = audit_run(base, m);
    const BoundEntry* inv = rep.find("invariance");
    REQUIRE(inv != nullptr);
    CHECK(inv->satisfied);
    CHECK(inv->measured <= inv->theoretical);
    for (const char* name : {"linf_growth", "total_variation", "w11_regularity", "kappa0_over_kappa", "lipschitz", "tangent_l1"}) {
        const BoundEntry* e = rep.find(name);
        REQUIRE(e != nullptr);
        CHECK_MESSAGE(e->satisfied, name);
    }
    CHECK(rep.warnings.empty());

    const auto j = nlohmann::json::parse(rep.to_json());
    CHECK(j["all_satisfied"] == true);
    CHECK(j["entries"].size() == rep.entries.size());
    CHECK(rep.table().find("tangent_l1") != std::string::npos);
}

TEST_CASE("zero datum audit") {
    const Grid g = Grid::line(-1.0, 2.5, 100);
    const SupplyChainModel m({1.0, 0.0, 1.0});
    const BoundsReport rep = audit_run(solve(Field(g), m, config(0.3)), m);
    CHECK(rep.all_satisfied());
    for (const auto& e : rep.entries) {
        if (e.name == "kappa0_over_kappa" || e.name == "lipschitz") continue;
        CHECK_MESSAGE(e.measured == 0.0, e.name);
    }
}

TEST_CASE("pedestrian audit with a converging direction field") {
    const Grid g = Grid::plane({0.0, 0.0}, {4.0, 2.0}, {80, 40});
    const PedestrianModel m = corridor_model(g);
    const Trajectory base = solve(testing::bump(g, {1.0, 1.0}, 0.5, 2.0), m, config(1.0));
    const BoundsReport rep = audit_run(base, m);
    const BoundEntry* e = rep.find("linf_growth");
    REQUIRE(e != nullptr);
    CHECK(e->satisfied);
    CHECK(e->margin > 0.0);
    CHECK(rep.find("invariance") == nullptr);
    CHECK(rep.all_satisfied());
}

TEST_CASE("boundary outflow raises a warning") {
    const Grid g = Grid::line(0.0, 1.0, 100);
    const SupplyChainModel m({1.0, 0.0, 1.0});
    const BoundsReport rep = audit_run(solve(testing::bump(g, {0.8, 0.0}, 0.15), m, config(0.4)), m);
    REQUIRE_FALSE(rep.warnings.empty());
    CHECK(rep.warnings.front().find("boundary flux") != std::string::npos);
}

TEST_CASE("Lipschitz study") {
    const Grid g = Grid::line(-1.0, 3.0, 400);
    const SupplyChainModel m({1.0, 0.0, 1.0});
    const Field a = testing::bump(g, {0.0, 0.0}, 0.4);
    CHECK(lipschitz_study(a, a, m, 0.5, config(0.5)) == 1.0);

    const Field b = testing::bump(g, {0.1, 0.0}, 0.4);
    CHECK(lipschitz_study(a, b, m, 0.5, config(0.5)) <= 1.0 + 10.0 * g.spacing[0]);

    const Field c = combine(1.0, a, 0.3, testing::random_field(g, 5, 0.0, 1.0));
    const double ratio = lipschitz_study(a, c, m, 0.5, config(0.5));
    double beta = 0.0, tv = 0.0;
    for (const Field& f : {a, c}) {
        for (const Field& s : solve(f, m, config(0.5)).states) {
            beta = std::max(beta, norm_linf(s));
            tv = std::max(tv, total_variation(s));
        }
    }
    CHECK(ratio <= lipschitz_envelope(m, 1, beta, tv, 0.5));
}

TEST_CASE("Gateaux study") {
    const Grid g = Grid::line(-1.0, 3.0, 300);
    const SupplyChainModel m({1.0, 0.0, 1.0});
    const Field rho = testing::bump(g, {0.0, 0.0}, 0.4);
    const GateauxStudy zero = gateaux_study(rho, Field(g), m, config(0.3), {1e-2, 1e-3});
    for (const auto& r : zero.rows) CHECK(r.l1_error == 0.0);

    VectorField w(g);
    for (std::size_t k = 0; k < g.size(); ++k) w.x[k] = 1.0 + 0.3 * std::sin(g.center_of(k)[0]);
    const FrozenVelocityModel lin(w);
    const GateauxStudy flat = gateaux_study(rho, testing::random_field(g, 2), lin, config(0.3), {1e-2, 1e-3, 1e-4});
    for (const auto& r : flat.rows) CHECK(r.l1_error < 1e-9);

    const GateauxStudy st = gateaux_study(rho, testing::bump(g, {0.2, 0.0}, 0.3), m, config(0.3), {1e-2, 1e-3, 1e-4});
    CHECK(st.slope == doctest::Approx(1.0).epsilon(0.05));
    CHECK(st.rows[2].observed_order == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("fitted order") {
    CHECK(fitted_order({1.0, 0.1, 0.01}, {2.0, 0.02, 0.0002}) == doctest::Approx(2.0));
    CHECK(fitted_order({1.0}, {1.0}) == 0.0);
}

}
