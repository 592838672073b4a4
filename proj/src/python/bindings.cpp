#include "nlflow/bounds.hpp"
#include "nlflow/cli.hpp"
#include "nlflow/control.hpp"
#include "nlflow/descriptor.hpp"
#include "nlflow/errors.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace nlflow;

namespace {

py::array_t<double> to_numpy(const Field& f) {
    const Grid& g = f.grid();
    std::vector<py::ssize_t> shape;
    if (g.dim == 1) {
        shape = {g.cells[0]};
    } else {
        shape = {g.cells[1], g.cells[0]};
    }
    py::array_t<double> a(shape);
    std::copy(f.data().begin(), f.data().end(), a.mutable_data());
    return a;
}

Field from_numpy(const Grid& g, py::array_t<double, py::array::c_style | py::array::forcecast> a) {
    if (static_cast<std::size_t>(a.size()) != g.size()) throw ConfigError("array size does not match the grid");
    return Field(g, std::vector<double>(a.data(), a.data() + a.size()));
}

} // namespace

PYBIND11_MODULE(_nlflow, m) {
    m.doc() = "nonlocal conservation laws: forward solver, sensitivities and audits";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

    py::enum_<Boundary>(m, "Boundary").value("outflow", Boundary::outflow).value("periodic", Boundary::periodic);

    py::class_<Grid>(m, "Grid")
        .def_static("line", &Grid::line, py::arg("x0"), py::arg("length"), py::arg("n"))
        .def_static("plane", &Grid::plane, py::arg("origin"), py::arg("extents"), py::arg("cells"))
        .def_readonly("dim", &Grid::dim)
        .def_readonly("cells", &Grid::cells)
        .def_readonly("spacing", &Grid::spacing)
        .def_property_readonly("size", &Grid::size)
        .def_property_readonly("cell_volume", &Grid::cell_volume)
        .def("centers", [](const Grid& g) {
            std::vector<Point> c(g.size());
            for (std::size_t k = 0; k < g.size(); ++k) c[k] = g.center_of(k);
            return c;
        });

    py::class_<VelocityModel>(m, "VelocityModel")
        .def_property_readonly("name", &VelocityModel::name)
        .def_property_readonly("dim", &VelocityModel::dim)
        .def("lipschitz_scale", &VelocityModel::lipschitz_scale);

    py::class_<SupplyChainModel, VelocityModel>(m, "SupplyChainModel")
        .def(py::init([](double vmax, double lo, double hi) { return SupplyChainModel({vmax, lo, hi}); }),
             py::arg("vmax") = 1.0, py::arg("window_lo") = 0.0, py::arg("window_hi") = 1.0);

    py::class_<PedestrianModel, VelocityModel>(m, "PedestrianModel")
        .def(py::init([](const Grid& g, double radius, Point exit, double vmax, double cap, const std::string& law) {
                 PedestrianParams p;
                 p.law.kind = speed_law_from_string(law);
                 p.law.vmax = vmax;
                 p.law.cap = cap;
                 p.kernel_radius = radius;
                 p.direction = corridor_to_exit(g, exit);
                 return PedestrianModel(g, std::move(p));
             }),
             py::arg("grid"), py::arg("kernel_radius"), py::arg("exit"), py::arg("vmax") = 1.0, py::arg("cap") = 4.0,
             py::arg("law") = "clamped");

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("times", &Trajectory::times)
        .def_readonly("dt_sequence", &Trajectory::dt_sequence)
        .def_readonly("boundary_outflow", &Trajectory::boundary_outflow)
        .def_property_readonly("steps", &Trajectory::steps)
        .def_property_readonly("states", [](const Trajectory& t) {
            py::list out;
            for (const auto& s : t.states) out.append(to_numpy(s));
            return out;
        })
        .def_property_readonly("final_state", [](const Trajectory& t) { return to_numpy(t.final_state()); });

    m.def(
        "solve",
        [](const Grid& g, py::array_t<double> rho, const VelocityModel& model, double t_end, double cfl,
           Boundary boundary, int record_every) {
            SolverConfig cfg;
            cfg.t_end = t_end;
            cfg.cfl = cfl;
            cfg.boundary = boundary;
            cfg.record_every = record_every;
            cfg.validate();
            return solve(from_numpy(g, rho), model, cfg);
        },
        py::arg("grid"), py::arg("rho"), py::arg("model"), py::arg("t_end"), py::arg("cfl") = 0.45,
        py::arg("boundary") = Boundary::outflow, py::arg("record_every") = 1);

    m.def(
        "mass", [](const Grid& g, py::array_t<double> rho) { return mass(from_numpy(g, rho)); }, py::arg("grid"),
        py::arg("rho"));
    m.def(
        "total_variation", [](const Grid& g, py::array_t<double> rho) { return total_variation(from_numpy(g, rho)); },
        py::arg("grid"), py::arg("rho"));

    m.def(
        "tangent", [](const Trajectory& base, py::array_t<double> r_o, const VelocityModel& model) {
            return to_numpy(tangent_solve(from_numpy(base.grid, r_o), base, model).final_state());
        },
        py::arg("base"), py::arg("r_o"), py::arg("model"));

    m.def("wallis", &wallis, py::arg("N"));
    m.def("kappa_constants", [](double grad_w, int N) {
        const KappaConstants k = kappa_constants(grad_w, N);
        return py::make_tuple(k.kappa, k.kappa0);
    });
    m.def(
        "existence_time",
        [](double alpha, double beta, const std::function<double(double)>& C) { return existence_time(alpha, beta, C); },
        py::arg("alpha"), py::arg("beta"), py::arg("C"));

    m.def(
        "bounds_report",
        [](const Trajectory& base, const VelocityModel& model, std::uint64_t seed) {
            AuditOptions opt;
            opt.seed = seed;
            return audit_run(base, model, opt).to_json();
        },
        py::arg("base"), py::arg("model"), py::arg("seed") = 1);

    m.def("schema", [] { return descriptor_schema_text(); });
    m.def("commands", &cli::commands);
    m.def(
        "run_cli",
        [](const std::string& command, const std::string& config, const std::string& out, std::optional<std::uint64_t> seed,
           bool quiet) {
            cli::Options opt{command, config, out, seed, quiet};
            std::ostringstream log, err;
            const int code = cli::run(opt, log, err);
            return py::make_tuple(code, log.str(), err.str());
        },
        py::arg("command"), py::arg("config"), py::arg("out") = "", py::arg("seed") = py::none(),
        py::arg("quiet") = true);
}
