#include "doctest.h"
#include "helpers.hpp"

#include "nlflow/characteristics.hpp"
#include "nlflow/forward.hpp"

#include <cmath>

using namespace nlflow;

namespace {

FlowMap flow1(std::function<double(double)> w, std::function<double(double)> div, double h = 1e-3) {
    return FlowMap(1, [w](double, const Point& x) { return Point{w(x[0]), 0.0}; },
                   div ? ScalarFn([div](double, const Point& x) { return div(x[0]); }) : ScalarFn{}, h);
}

} // namespace

TEST_SUITE("characteristics") {

TEST_CASE("stationary flow") {
    const FlowMap f = flow1([](double) { return 0.0; }, nullptr);
    for (double t : {0.0, 0.5, -2.0}) CHECK(trace({0.3, 0.0}, 0.0, t, f).x[0] == 0.3);
}

TEST_CASE("constant flow moves along straight lines") {
    const FlowMap f = flow1([](double) { return -1.5; }, nullptr);
    CHECK(trace({0.3, 0.0}, 0.2, 1.0, f).x[0] == doctest::Approx(0.3 - 1.5 * 0.8).epsilon(1e-14));
    CHECK(trace({0.3, 0.0}, 1.0, 0.2, f).x[0] == doctest::Approx(0.3 + 1.5 * 0.8).epsilon(1e-14));

    const FlowMap f2(2, [](double, const Point&) { return Point{0.5, -0.25}; }, {}, 0.01);
    const TracePoint p = trace({1.0, 1.0}, 0.0, 2.0, f2);
    CHECK(p.x[0] == doctest::Approx(2.0));
    CHECK(p.x[1] == doctest::Approx(0.5));
}

TEST_CASE("linear flow is exponential") {
    const FlowMap f = flow1([](double x) { return x; }, [](double) { return 1.0; });
    for (double t : {0.5, 1.0, 2.0}) {
        CHECK(std::fabs(trace({0.7, 0.0}, 0.0, t, f).x[0] - 0.7 * std::exp(t)) <= 1e-8);
        CHECK(std::fabs(trace({0.7, 0.0}, t, 0.0, f).x[0] - 0.7 * std::exp(-t)) <= 1e-8);
    }
}

TEST_CASE("escape from the domain is reported") {
    FlowMap f = flow1([](double) { return 1.0; }, nullptr);
    f.set_domain({0.0, 0.0}, {1.0, 1.0});
    CHECK_FALSE(trace({0.2, 0.0}, 0.0, 0.5, f).escaped);
    CHECK(trace({0.2, 0.0}, 0.0, 1.5, f).escaped);
}

TEST_CASE("jacobian") {
    const FlowMap f0 = flow1([](double) { return 2.0; }, nullptr);
    CHECK(jacobian({0.1, 0.0}, 1.3, f0) == doctest::Approx(1.0).epsilon(1e-14));
    const FlowMap f1 = flow1([](double x) { return x; }, [](double) { return 1.0; });
    for (double t : {0.25, 1.0}) CHECK(jacobian({0.4, 0.0}, t, f1) == doctest::Approx(std::exp(t)).epsilon(1e-12));
    // Divergence by centred differences when none is supplied.
    const FlowMap f2 = flow1([](double x) { return x; }, nullptr);
    CHECK(jacobian({0.4, 0.0}, 1.0, f2) == doctest::Approx(std::exp(1.0)).epsilon(1e-8));
}

TEST_CASE("recorded supply-chain velocity is volume preserving") {
    const Grid g = Grid::line(-1.0, 3.0, 200);
    SolverConfig c;
    c.t_end = 0.5;
    const Trajectory tr = solve(testing::bump(g, {0.0, 0.0}, 0.4), SupplyChainModel({1.0, 0.0, 1.0}), c);
    const FlowMap f = FlowMap::from_trajectory(tr);
    for (double y : {-0.5, 0.0, 0.7}) {
        for (double t : {0.1, 0.3, 0.5}) CHECK(jacobian({y, 0.0}, t, f) == doctest::Approx(1.0).epsilon(1e-12));
    }
    // Characteristics move at the recorded speed; RK4 substeps straddle the checkpoint kinks.
    double x = 0.0;
    for (std::size_t c2 = 0; c2 + 1 < tr.times.size(); ++c2) {
        x += 0.5 * (tr.velocities[c2].x[0] + tr.velocities[c2 + 1].x[0]) * (tr.times[c2 + 1] - tr.times[c2]);
    }
    CHECK(trace({0.0, 0.0}, 0.0, 0.5, f).x[0] == doctest::Approx(x).epsilon(1e-6));
}

TEST_CASE("representation formula: translation") {
    const Grid g = Grid::line(0.0, 4.0, 400);
    const auto r0 = [](const Point& x) { return testing::bump1(x[0], 1.0, 0.5); };
    const FlowMap f = flow1([](double) { return 0.75; }, nullptr, 0.01);
    const Field r = representation_solution(r0, g, {}, f, 2.0);
    for (std::size_t k = 0; k < g.size(); k += 7) {
        CHECK(r[k] == doctest::Approx(testing::bump1(g.center_of(k)[0] - 1.5, 1.0, 0.5)).epsilon(1e-12));
    }
}

TEST_CASE("representation formula: linear flow") {
    const Grid g = Grid::line(-3.0, 6.0, 1000);
    const auto r0 = [](const Point& x) { return std::exp(-4.0 * (x[0] - 0.5) * (x[0] - 0.5)); };
    const FlowMap f = flow1([](double x) { return x; }, [](double) { return 1.0; });
    const double t = 0.8;
    const Field r = representation_solution(r0, g, {}, f, t);
    const Field exact = Field::from_function(g, [&](const Point& x) { return r0({x[0] * std::exp(-t), 0.0}) * std::exp(-t); });
    CHECK(norm_l1(r - exact) <= 1e-6);
}

TEST_CASE("representation formula: pure source") {
    const Grid g = Grid::line(0.0, 1.0, 50);
    const FlowMap f = flow1([](double) { return 0.0; }, nullptr, 0.01);
    const Field r = representation_solution([](const Point&) { return 0.0; }, g,
                                            [](double, const Point&) { return 1.0; }, f, 0.7);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(r[k] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("representation formula agrees with the solver on a frozen field") {
    const Grid g = Grid::line(0.0, 3.0, 1500);
    VectorField w(g);
    for (std::size_t k = 0; k < g.size(); ++k) w.x[k] = 1.0 + 0.5 * std::sin(2.0 * M_PI * g.center_of(k)[0]);
    const FrozenVelocityModel m(w);
    SolverConfig c;
    c.t_end = 0.5;
    c.record_every = 1 << 20;
    const auto r0 = [](const Point& x) { return testing::bump1(x[0], 0.8, 0.4); };
    const Trajectory tr = solve(Field::from_function(g, r0), m, c);
    const FlowMap f(1, [](double, const Point& x) { return Point{1.0 + 0.5 * std::sin(2.0 * M_PI * x[0]), 0.0}; },
                    [](double, const Point& x) { return M_PI * std::cos(2.0 * M_PI * x[0]); }, 1e-3);
    const Field exact = representation_solution(r0, g, {}, f, 0.5);
    CHECK(norm_l1(tr.final_state() - exact) < 1e-2);
    CHECK(mass(exact) == doctest::Approx(mass(tr.final_state())).epsilon(1e-4));
}

}
